#pragma once

#include <array>

#include "relpot/model/graph_layout.hpp"
#include "relpot/model/types.hpp"

namespace relpot {

// Latent-conditioned trajectory energies. One shared message-passing network
// scores all edges; each of the L potentials per edge conditions the shared
// features through FiLM, and an (edge, slot) mask zeroes edge features right
// before the edge->node summation, so masked potentials contribute exactly
// nothing. Swish activations throughout.
//
// Long-term head: strided temporal convs + global pooling over the whole
// trajectory. Short-term head: length-5 windows of stride 1 scored per
// window. Total energy is their sum.
struct EnergyNets {
  ModelConfig cfg;

  // long-term
  nn::Conv1d lt_down1, lt_down2;
  std::array<nn::Conv1d, 4> lt_cond;
  std::array<nn::FilmGenerator, 4> lt_film;
  nn::Dense lt_node_fc, lt_head;

  // short-term
  static constexpr int kWindow = 5;
  nn::Conv1d st_down1, st_down2;
  nn::Dense st_win_fc;
  std::array<nn::Dense, 4> st_cond;
  std::array<nn::FilmGenerator, 4> st_film;
  nn::Dense st_node_fc1, st_node_fc2, st_head;

  // optional conditioning-free branch used by masked-out edges
  nn::Conv1d ult_cond1, ult_cond2;
  nn::Dense ust_fc1, ust_fc2;

  static EnergyNets build(ParamStore& ps, const ModelConfig& cfg, Rng& rng) {
    EnergyNets n;
    n.cfg = cfg;
    const int h = cfg.energy_hidden;
    const int in_ch = 2 * cfg.state_dim;
    const int dz = cfg.latent_dim;

    n.lt_down1 = nn::Conv1d::create(ps, "lt.down1", in_ch, h, 5, 2, 2, rng);
    n.lt_down2 = nn::Conv1d::create(ps, "lt.down2", h, h, 5, 2, 2, rng);
    for (int i = 0; i < 4; ++i) {
      n.lt_cond[i] = nn::Conv1d::create(ps, "lt.cond" + std::to_string(i), h, h,
                                        5, 1, 2, rng);
      n.lt_film[i] = nn::FilmGenerator::create(
          ps, "lt.film" + std::to_string(i), dz, h, rng);
    }
    n.lt_node_fc = nn::Dense::create(ps, "lt.node_fc", h, h, rng);
    n.lt_head = nn::Dense::create(ps, "lt.head", h, 1, rng);

    // first short-term conv halves the sequence; the second keeps its length
    // so unfolding stays defined on short generated windows
    n.st_down1 = nn::Conv1d::create(ps, "st.down1", in_ch, h, 5, 2, 2, rng);
    n.st_down2 = nn::Conv1d::create(ps, "st.down2", h, h, 5, 1, 2, rng);
    n.st_win_fc = nn::Dense::create(ps, "st.win_fc", kWindow * h, h, rng);
    for (int i = 0; i < 4; ++i) {
      n.st_cond[i] =
          nn::Dense::create(ps, "st.cond" + std::to_string(i), h, h, rng);
      n.st_film[i] = nn::FilmGenerator::create(
          ps, "st.film" + std::to_string(i), dz, h, rng);
    }
    n.st_node_fc1 = nn::Dense::create(ps, "st.node_fc1", h, h, rng);
    n.st_node_fc2 = nn::Dense::create(ps, "st.node_fc2", h, h, rng);
    n.st_head = nn::Dense::create(ps, "st.head", h, 1, rng);

    if (cfg.unconditional_branch) {
      n.ult_cond1 = nn::Conv1d::create(ps, "ult.cond1", h, h, 5, 1, 2, rng);
      n.ult_cond2 = nn::Conv1d::create(ps, "ult.cond2", h, h, 5, 1, 2, rng);
      n.ust_fc1 = nn::Dense::create(ps, "ust.fc1", h, h, rng);
      n.ust_fc2 = nn::Dense::create(ps, "ust.fc2", h, h, rng);
    }
    return n;
  }

  struct Batched {
    Var per_node_lt;  // [B*N, 1]
    Var per_node_st;
    Var per_node;
    Var sample_lt;  // [B, 1]
    Var sample_st;
    Var sample_total;
  };

  // x: [B*T*N, D] rows (b, t, n); z: [B*E*L, D_z]; mask: [B*E*L, 1] of 0/1.
  Batched operator()(const Var& x, const Var& z, const Var& mask, int B, int T,
                     int N) const {
    const int D = cfg.state_dim, L = cfg.n_latent;
    const EdgeIndex edges = EdgeIndex::make(N);
    const int E = edges.size();
    if (x.rows() != B * T * N || x.cols() != D)
      throw ShapeError("energy: trajectory layout mismatch");
    if (z.rows() != B * E * L || z.cols() != cfg.latent_dim)
      throw ShapeError("energy: latent layout mismatch");
    if (mask.rows() != B * E * L || mask.cols() != 1)
      throw ShapeError("energy: mask layout mismatch");

    // node -> edge input streams shared by both heads
    Var snd = gather_rows(x, layout::sender_time_rows(B, T, N, edges));
    Var rcv = gather_rows(x, layout::receiver_time_rows(B, T, N, edges));
    Var edge_in = concat_cols(snd, rcv);  // [B*E*T, 2D]

    Batched out;
    Var lt_nodes = long_term_nodes(edge_in, z, mask, B, N, T, edges);
    Var st_nodes = short_term_nodes(edge_in, z, mask, B, N, T, edges);
    out.per_node_lt = lt_nodes;
    out.per_node_st = st_nodes;
    out.per_node = add(lt_nodes, st_nodes);
    const auto to_sample = layout::node_to_sample_rows(B, N);
    out.sample_lt = scatter_rows(lt_nodes, to_sample, B);
    out.sample_st = scatter_rows(st_nodes, to_sample, B);
    out.sample_total = add(out.sample_lt, out.sample_st);
    return out;
  }

 private:
  // Conditioned edge features -> masked edge->node sum -> node energy.
  Var long_term_nodes(const Var& edge_in, const Var& z, const Var& mask, int B,
                      int N, int T, const EdgeIndex& edges) const {
    const int E = edges.size(), L = cfg.n_latent;
    const int S = B * E;
    int t = T;
    Var h = silu(lt_down1(edge_in, S, t));
    t = lt_down1.out_len(t);
    h = silu(lt_down2(h, S, t));
    t = lt_down2.out_len(t);

    // replicate per latent slot, then condition per (edge, slot)
    Var hc = gather_rows(h, layout::replicate_per_slot(S, L, t));
    const int SC = S * L;
    const auto row_stream = layout::stream_of_inner(SC, t);
    for (int i = 0; i < 4; ++i) {
      hc = lt_cond[i](hc, SC, t);
      auto [gamma, beta] = lt_film[i](z);
      hc = nn::film(hc, gather_rows(gamma, row_stream),
                    gather_rows(beta, row_stream));
      hc = silu(hc);
    }
    Var pooled = nn::temporal_mean(hc, SC, t);  // [B*E*L, h]

    if (cfg.unconditional_branch) {
      Var hu = silu(ult_cond1(h, S, t));
      hu = silu(ult_cond2(hu, S, t));
      Var pu = gather_rows(nn::temporal_mean(hu, S, t),
                           layout::replicate_per_slot(S, L));
      pooled = add(mul(mask, pooled),
                   mul(sub(Var::scalar(1.f), mask), pu));
    } else {
      pooled = mul(mask, pooled);
    }

    Var nodes = scatter_rows(
        pooled, layout::edge_slot_to_node_rows(B, N, L, edges), B * N);
    nodes = silu(lt_node_fc(nodes));
    return lt_head(nodes);  // [B*N, 1]
  }

  Var short_term_nodes(const Var& edge_in, const Var& z, const Var& mask,
                       int B, int N, int T, const EdgeIndex& edges) const {
    const int E = edges.size(), L = cfg.n_latent;
    const int S = B * E;
    int t = T;
    Var h = silu(st_down1(edge_in, S, t));
    t = st_down1.out_len(t);
    h = silu(st_down2(h, S, t));
    t = st_down2.out_len(t);
    if (t < kWindow)
      throw ShapeError(
          "energy_short: trajectory too short for length-" +
          std::to_string(kWindow) + " windows after downsampling (have " +
          std::to_string(t) + " steps)");
    const int W = t - kWindow + 1;

    Var wins = reshape(gather_rows(h, layout::unfold_rows(S, t, kWindow, 1)),
                       S * W, kWindow * cfg.energy_hidden);
    Var hw = silu(st_win_fc(wins));  // [B*E*W, h]

    Var hc = gather_rows(hw, layout::replicate_per_slot(S, L, W));
    const int SC = S * L;
    const auto row_stream = layout::stream_of_inner(SC, W);
    for (int i = 0; i < 4; ++i) {
      hc = st_cond[i](hc);
      auto [gamma, beta] = st_film[i](z);
      hc = nn::film(hc, gather_rows(gamma, row_stream),
                    gather_rows(beta, row_stream));
      hc = silu(hc);
    }

    Var mask_w = gather_rows(mask, layout::stream_of_inner(SC, W));
    if (cfg.unconditional_branch) {
      Var hu = silu(ust_fc1(hw));
      hu = silu(ust_fc2(hu));
      Var hur = gather_rows(hu, layout::replicate_per_slot(S, L, W));
      hc = add(mul(mask_w, hc), mul(sub(Var::scalar(1.f), mask_w), hur));
    } else {
      hc = mul(mask_w, hc);
    }

    Var nodes_w = scatter_rows(
        hc, layout::edge_slot_to_node_rows(B, N, L, edges, W), B * N * W);
    nodes_w = silu(st_node_fc1(nodes_w));
    nodes_w = silu(st_node_fc2(nodes_w));
    Var e_w = st_head(nodes_w);  // [B*N*W, 1]
    // sum window energies per node
    return scatter_rows(e_w, layout::stream_of_inner(B * N, W), B * N);
  }
};

// ---- spec-level single-trajectory wrappers ---------------------------------

inline Var latents_to_var(const LatentSet& z) {
  z.validate();
  return Var::constant(z.z);
}

inline Var mask_to_var(const EdgeMask& m, int batch = 1) {
  m.validate();
  Tensor t(batch * m.n_edges * m.n_latent, 1);
  for (int b = 0; b < batch; ++b)
    for (std::size_t i = 0; i < m.m.size(); ++i)
      t.at(b * m.m.size() + i) = m.m[i];
  return Var::constant(t);
}

namespace detail {
inline EnergyValue pack_energy(const EnergyNets::Batched& b, int N,
                               bool lt_only = false, bool st_only = false) {
  EnergyValue v;
  v.long_term = st_only ? 0.f : b.sample_lt.value().at(0);
  v.short_term = lt_only ? 0.f : b.sample_st.value().at(0);
  v.total = v.long_term + v.short_term;
  v.per_node.resize(N);
  const Var& src = lt_only ? b.per_node_lt : st_only ? b.per_node_st : b.per_node;
  for (int n = 0; n < N; ++n) v.per_node[n] = src.value().at(n);
  return v;
}
}  // namespace detail

inline EnergyValue total_energy(const Trajectory& x, const LatentSet& z,
                                const EdgeMask& mask, const EnergyNets& nets) {
  if (x.raw) throw ConfigError("total_energy: expects normalized trajectory");
  auto b = nets(Var::constant(x.matrix()), latents_to_var(z), mask_to_var(mask),
                1, x.T, x.N);
  if (!b.per_node.value().all_finite())
    throw NumericError("total_energy: non-finite activations");
  return detail::pack_energy(b, x.N);
}

inline EnergyValue energy_long(const Trajectory& x, const LatentSet& z,
                               const EdgeMask& mask, const EnergyNets& nets) {
  auto b = nets(Var::constant(x.matrix()), latents_to_var(z), mask_to_var(mask),
                1, x.T, x.N);
  return detail::pack_energy(b, x.N, /*lt_only=*/true);
}

inline EnergyValue energy_short(const Trajectory& x, const LatentSet& z,
                                const EdgeMask& mask, const EnergyNets& nets) {
  auto b = nets(Var::constant(x.matrix()), latents_to_var(z), mask_to_var(mask),
                1, x.T, x.N);
  return detail::pack_energy(b, x.N, false, /*st_only=*/true);
}

// Energy of a single (edge, slot) potential: every other edge is masked out.
inline float per_edge_energy(const Trajectory& x, const LatentSet& z,
                             int sender, int receiver, int slot,
                             const EnergyNets& nets) {
  const EdgeIndex edges = EdgeIndex::make(x.N);
  if (slot < 0 || slot >= nets.cfg.n_latent)
    throw ShapeError("per_edge_energy: slot out of range");
  const int e = edges.index_of(sender, receiver);
  EdgeMask mask = EdgeMask::one_hot(edges.size(), nets.cfg.n_latent, e, slot);
  return total_energy(x, z, mask, nets).total;
}

}  // namespace relpot
