#pragma once

#include "relpot/model/graph_layout.hpp"
#include "relpot/model/types.hpp"

namespace relpot {

// Message-passing encoder: maps an observed trajectory segment to L latent
// codes per directed edge. Per-edge temporal CNN -> pool -> edge/node message
// rounds -> dense head with layer norm. ELU activations.
struct EncoderNet {
  ModelConfig cfg;
  nn::Conv1d conv1, conv2, conv3;
  nn::Dense edge_fc1, edge_fc2;
  nn::Dense node_fc1, node_fc2;
  nn::Dense out;
  nn::LayerNorm ln;

  static constexpr int kMinObs = 8;  // receptive floor of the 3-block stack

  static EncoderNet build(ParamStore& ps, const ModelConfig& cfg, Rng& rng) {
    EncoderNet n;
    n.cfg = cfg;
    const int h = cfg.enc_hidden;
    const int views = cfg.augmented_views ? 3 : 1;
    const int in_ch = 2 * cfg.state_dim * views;
    n.conv1 = nn::Conv1d::create(ps, "enc.conv1", in_ch, h, 5, 2, 2, rng);
    n.conv2 = nn::Conv1d::create(ps, "enc.conv2", h, h, 5, 2, 2, rng);
    n.conv3 = nn::Conv1d::create(ps, "enc.conv3", h, h, 5, 2, 2, rng);
    n.edge_fc1 = nn::Dense::create(ps, "enc.edge_fc1", h, h, rng);
    n.edge_fc2 = nn::Dense::create(ps, "enc.edge_fc2", h, h, rng);
    n.node_fc1 = nn::Dense::create(ps, "enc.node_fc1", h, h, rng);
    n.node_fc2 = nn::Dense::create(ps, "enc.node_fc2", h, h, rng);
    n.out = nn::Dense::create(ps, "enc.out", 2 * h,
                              cfg.n_latent * cfg.latent_dim, rng);
    n.ln = nn::LayerNorm::create(ps, "enc.ln", cfg.latent_dim);
    return n;
  }

  // x_obs: [B*T_obs*N, D] rows (b, t, n). Returns latents [B*E*L, D_z].
  Var operator()(const Var& x_obs, int B, int T_obs, int N) const {
    const int D = cfg.state_dim;
    if (x_obs.rows() != B * T_obs * N || x_obs.cols() != D)
      throw ShapeError("encoder: input layout mismatch");
    if (T_obs < kMinObs)
      throw ConfigError("encoder: observed segment too short (need >= " +
                        std::to_string(kMinObs) + " steps)");
    if (!x_obs.value().all_finite())
      throw NumericError("encoder: non-finite input");

    const EdgeIndex edges = EdgeIndex::make(N);
    const int E = edges.size();

    Var input = cfg.augmented_views ? augment(x_obs, B) : x_obs;

    // node -> edge: concatenate sender/receiver trajectories channel-wise
    Var snd = gather_rows(input, layout::sender_time_rows(B, T_obs, N, edges));
    Var rcv = gather_rows(input, layout::receiver_time_rows(B, T_obs, N, edges));
    Var h = concat_cols(snd, rcv);  // [B*E*T_obs, 2*D*views]

    const int S = B * E;
    int t = T_obs;
    h = elu(conv1(h, S, t));
    t = conv1.out_len(t);
    h = elu(conv2(h, S, t));
    t = conv2.out_len(t);
    h = elu(conv3(h, S, t));
    t = conv3.out_len(t);
    h = nn::temporal_mean(h, S, t);  // [B*E, h]

    h = elu(edge_fc1(h));
    Var edge_feat = elu(edge_fc2(h));

    // edge -> node: summed contribution of incoming edges
    Var node_feat = scatter_rows(edge_feat,
                                 layout::edge_to_node_rows(B, N, edges), B * N);
    node_feat = elu(node_fc1(node_feat));
    node_feat = elu(node_fc2(node_feat));

    // node -> edge again, then the latent head
    std::vector<int> snd_rows(static_cast<std::size_t>(B) * E);
    std::vector<int> rcv_rows(static_cast<std::size_t>(B) * E);
    std::size_t w = 0;
    for (int b = 0; b < B; ++b)
      for (int e = 0; e < E; ++e, ++w) {
        snd_rows[w] = b * N + edges.pairs[e].first;
        rcv_rows[w] = b * N + edges.pairs[e].second;
      }
    Var pair = concat_cols(gather_rows(node_feat, snd_rows),
                           gather_rows(node_feat, rcv_rows));
    Var z = out(pair);  // [B*E, L*D_z]
    z = reshape(z, B * E * cfg.n_latent, cfg.latent_dim);
    return ln(z);
  }

 private:
  // Extra input views for recombination training: a 90-degree rotation of the
  // planar components and an instance-normalized copy, stacked channel-wise.
  Var augment(const Var& x, int B) const {
    const int D = cfg.state_dim;
    const int half = D / 2;
    // rotate (x, y) -> (-y, x) for positions and velocities
    std::vector<Var> cols;
    for (int blk = 0; blk < 2; ++blk) {
      const int o = blk * half;
      cols.push_back(neg(slice_cols(x, o + 1, o + 2)));
      cols.push_back(slice_cols(x, o, o + 1));
      for (int d = 2; d < half; ++d)
        cols.push_back(slice_cols(x, o + d, o + d + 1));
    }
    Var rot = cols[0];
    for (std::size_t i = 1; i < cols.size(); ++i)
      rot = concat_cols(rot, cols[i]);

    // per-trajectory normalization of this segment, per dimension
    const int per_b = x.rows() / B;
    const auto to_b = layout::stream_of_inner(B, per_b);
    const float inv_n = 1.f / static_cast<float>(per_b);
    Var mean = gather_rows(
        mul(scatter_rows(x, to_b, B), Var::scalar(inv_n)), to_b);
    Var centered = sub(x, mean);
    Var var = gather_rows(
        mul(scatter_rows(mul(centered, centered), to_b, B), Var::scalar(inv_n)),
        to_b);
    Var inst = div(centered, sqrt(add(var, Var::scalar(1e-5f))));

    return concat_cols(concat_cols(x, rot), inst);
  }
};

// Single-trajectory wrapper returning the spec-level LatentSet.
inline LatentSet encode(const Trajectory& x_obs, const EncoderNet& enc) {
  if (x_obs.raw) throw ConfigError("encode: expects a normalized trajectory");
  Var x = Var::constant(x_obs.matrix());
  Var z = enc(x, 1, x_obs.T, x_obs.N);
  LatentSet out;
  out.n_latent = enc.cfg.n_latent;
  out.dim = enc.cfg.latent_dim;
  out.edges = EdgeIndex::make(x_obs.N);
  out.z = z.value();
  out.validate();
  return out;
}

}  // namespace relpot
