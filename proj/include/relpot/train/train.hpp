#pragma once

#include <cstring>
#include <limits>
#include <map>
#include <ostream>

#include "relpot/sample/sampler.hpp"
#include "relpot/train/checkpoint.hpp"

namespace relpot {

enum class SplitStrategy { random, by_node, none };

inline const char* to_string(SplitStrategy s) {
  switch (s) {
    case SplitStrategy::random: return "random";
    case SplitStrategy::by_node: return "by_node";
    case SplitStrategy::none: return "none";
  }
  return "?";
}

inline SplitStrategy split_strategy_from(const std::string& s) {
  if (s == "random") return SplitStrategy::random;
  if (s == "by_node") return SplitStrategy::by_node;
  if (s == "none") return SplitStrategy::none;
  throw ConfigError("unknown split strategy: " + s);
}

struct TrainConfig {
  ModelConfig model;
  SplitSpec split;  // t_obs / t_init / t_total / gen_start

  float lr = 3e-4f;
  float lr_decay = 0.5f;
  int lr_decay_every = 100000;
  int batch_size = 16;
  int iterations = 1000;
  float lambda_reg = 1e-4f;

  int m_start = 3, m_end = 5;
  int m_ramp_iters = 400;
  float step_size = 0.4f;

  bool multi_step_supervision = true;
  float supervision_base = 0.5f;
  SplitStrategy split_strategy = SplitStrategy::random;

  int val_every = 100;
  int val_samples = 32;
  std::uint64_t seed = 0;

  void validate() const {
    model.validate();
    split.validate();
    if (!(lr > 0)) throw ConfigError("train: lr must be > 0");
    if (lambda_reg < 0) throw ConfigError("train: lambda_reg must be >= 0");
    if (m_start < 0 || m_end < m_start)
      throw ConfigError("train: M schedule must be nondecreasing");
    if (batch_size < 1 || iterations < 1)
      throw ConfigError("train: batch/iterations must be >= 1");
    if (supervision_base <= 0 || supervision_base > 1)
      throw ConfigError("train: supervision base must be in (0,1]");
  }

  int m_at(int iter) const {
    if (m_ramp_iters <= 0 || iter >= m_ramp_iters) return m_end;
    const double p = static_cast<double>(iter) / m_ramp_iters;
    return m_start +
           static_cast<int>(std::floor(p * (m_end - m_start + 1) * 0.999999));
  }
  float lr_at(int iter) const {
    return lr * std::pow(lr_decay, iter / lr_decay_every);
  }

  nlohmann::ordered_json to_json() const {
    return {{"model", model.to_json()},
            {"t_obs", split.t_obs},
            {"t_init", split.t_init},
            {"t_total", split.t_total},
            {"gen_start", split.gen_start},
            {"lr", lr},
            {"lr_decay", lr_decay},
            {"lr_decay_every", lr_decay_every},
            {"batch_size", batch_size},
            {"iterations", iterations},
            {"lambda_reg", lambda_reg},
            {"m_start", m_start},
            {"m_end", m_end},
            {"m_ramp_iters", m_ramp_iters},
            {"step_size", step_size},
            {"multi_step_supervision", multi_step_supervision},
            {"supervision_base", supervision_base},
            {"split_strategy", to_string(split_strategy)},
            {"val_every", val_every},
            {"val_samples", val_samples},
            {"seed", seed}};
  }
};

// Splits the (edge, slot) potentials into two disjoint, exhaustive masks.
inline std::pair<EdgeMask, EdgeMask> potential_split(const EdgeIndex& edges,
                                                     int n_latent,
                                                     SplitStrategy strategy,
                                                     std::uint64_t seed) {
  const int E = edges.size();
  EdgeMask a = EdgeMask::none(E, n_latent);
  EdgeMask b = EdgeMask::none(E, n_latent);
  Rng rng(seed);
  switch (strategy) {
    case SplitStrategy::none:
      return {EdgeMask::full(E, n_latent), b};
    case SplitStrategy::random:
      for (std::size_t i = 0; i < a.m.size(); ++i)
        (rng.bernoulli(0.5) ? a : b).m[i] = 1.f;
      return {a, b};
    case SplitStrategy::by_node: {
      std::vector<char> in_subset(edges.n_nodes);
      for (auto& c : in_subset) c = rng.bernoulli(0.5);
      for (int e = 0; e < E; ++e) {
        EdgeMask& target = in_subset[edges.pairs[e].second] ? a : b;
        for (int l = 0; l < n_latent; ++l) target.at(e, l) = 1.f;
      }
      return {a, b};
    }
  }
  throw ConfigError("potential_split: bad strategy");
}

struct Adam {
  float beta1 = 0.9f, beta2 = 0.999f, eps = 1e-8f;
  AdamState state;

  void init(const ParamStore& ps) {
    state.step_count = 0;
    state.m.clear();
    state.v.clear();
    for (const auto& name : ps.names()) {
      const Tensor& t = ps.at(name).value();
      state.m.emplace_back(t.rows(), t.cols(), 0.f);
      state.v.emplace_back(t.rows(), t.cols(), 0.f);
    }
  }

  void step(ParamStore& ps, const std::vector<Tensor>& grads, float lr) {
    const auto& names = ps.names();
    if (grads.size() != names.size() || state.m.size() != names.size())
      throw ShapeError("adam: gradient list mismatch");
    ++state.step_count;
    const float bc1 = 1.f - std::pow(beta1, static_cast<float>(state.step_count));
    const float bc2 = 1.f - std::pow(beta2, static_cast<float>(state.step_count));
    for (std::size_t i = 0; i < names.size(); ++i) {
      Var& p = ps.at(names[i]);
      Tensor w = p.value();
      Tensor& m = state.m[i];
      Tensor& v = state.v[i];
      const Tensor& g = grads[i];
      for (std::int64_t k = 0; k < w.size(); ++k) {
        m.at(k) = beta1 * m.at(k) + (1.f - beta1) * g.at(k);
        v.at(k) = beta2 * v.at(k) + (1.f - beta2) * g.at(k) * g.at(k);
        const float mh = m.at(k) / bc1;
        const float vh = v.at(k) / bc2;
        w.at(k) -= lr * mh / (std::sqrt(vh) + eps);
      }
      p.set_value(std::move(w));
    }
  }
};

namespace detail {

// Stacks dataset trajectories (already normalized) into [B*T*N, D] rows.
inline Tensor stack_batch(const TrajectoryDataset& ds,
                          const std::vector<int>& indices) {
  const auto& t0 = ds.trajectories.at(indices.at(0));
  Tensor out(static_cast<int>(indices.size()) * t0.T * t0.N, t0.D);
  std::size_t off = 0;
  for (int idx : indices) {
    const auto& tr = ds.trajectories.at(idx);
    std::copy(tr.states.begin(), tr.states.end(), out.data() + off);
    off += tr.states.size();
  }
  return out;
}

inline Tensor slice_window_rows(const Tensor& full, int B, int T, int N, int D,
                                int t0, int t1) {
  Tensor out(B * (t1 - t0) * N, D);
  for (int b = 0; b < B; ++b)
    std::memcpy(out.data() + static_cast<std::size_t>(b) * (t1 - t0) * N * D,
                full.data() + (static_cast<std::size_t>(b) * T + t0) * N * D,
                sizeof(float) * (t1 - t0) * N * D);
  return out;
}

}  // namespace detail

struct LossMetrics {
  float total = 0.f;
  float mse = 0.f;
  float cd = 0.f;
  float energy_sq = 0.f;
  float pos_energy = 0.f;
  float neg_energy = 0.f;
};

// One training objective evaluation following the autoencoding scheme:
// encode the observed segment, draw the window from noise, run m_steps of
// differentiable Langevin descent on the split potentials, then score.
//   L = L_MSE + lambda_reg * (L_CD + L_E2)
// The CD negative term detaches the sample, so it shapes the energy scale
// without feeding back through the sampling chain.
inline std::pair<Var, LossMetrics> training_loss(const Model& model,
                                                 const Tensor& x_full, int B,
                                                 int T, int N,
                                                 const TrainConfig& cfg,
                                                 int m_steps,
                                                 std::uint64_t iter_seed) {
  const int D = model.cfg.state_dim;
  const int L = model.cfg.n_latent;
  const EdgeIndex edges = EdgeIndex::make(N);
  const int E = edges.size();
  const int w0 = cfg.split.window_start();
  const int Tw = T - w0;

  // encode observations
  Var x_obs = Var::constant(
      detail::slice_window_rows(x_full, B, T, N, D, 0, cfg.split.t_obs));
  Var z = model.encoder(x_obs, B, cfg.split.t_obs, N);

  // per-sample potential split
  Tensor mask_a(B * E * L, 1), mask_b(B * E * L, 1);
  for (int b = 0; b < B; ++b) {
    auto [ma, mb] = potential_split(edges, L, cfg.split_strategy,
                                    derive_seed(iter_seed, 1000 + b));
    for (int i = 0; i < E * L; ++i) {
      mask_a.at(b * E * L + i) = ma.m[i];
      mask_b.at(b * E * L + i) = mb.m[i];
    }
  }

  // sample the window from noise with clamped initial conditions
  Tensor gt_window = detail::slice_window_rows(x_full, B, T, N, D, w0, T);
  Tensor x0 = init_window(gt_window, B, Tw, N, D, cfg.split.t_init,
                          derive_seed(iter_seed, 1));

  std::vector<TermFn> terms;
  terms.push_back(
      make_model_term(model.energy, z, Var::constant(mask_a), B, Tw, N));
  if (cfg.split_strategy != SplitStrategy::none)
    terms.push_back(
        make_model_term(model.energy, z, Var::constant(mask_b), B, Tw, N));

  SamplerConfig scfg;
  scfg.steps = m_steps;
  scfg.step_size = cfg.step_size;
  scfg.noise = 0.f;
  scfg.t_init = cfg.split.t_init;
  auto iterates = langevin(terms, x0, scfg, B, Tw, N, /*seed=*/0,
                           /*track=*/true);

  // supervised reconstruction error over the generated rows
  Var gt = Var::constant(gt_window);
  Var free = Var::constant(free_mask(B, Tw, N, cfg.split.t_init));
  const float denom = std::max(
      1.f, static_cast<float>(B) * cfg.split.predicted_len() * N * D);
  auto step_mse = [&](const Var& xm) {
    Var d = mul(sub(xm, gt), free);
    return mul(sum_all(mul(d, d)), Var::scalar(1.f / denom));
  };

  Var l_mse;
  if (cfg.multi_step_supervision && m_steps > 0) {
    std::vector<float> w(m_steps);
    float total_w = 0.f;
    for (int m = 1; m <= m_steps; ++m) {
      w[m - 1] = std::pow(cfg.supervision_base, static_cast<float>(m_steps - m));
      total_w += w[m - 1];
    }
    for (int m = 1; m <= m_steps; ++m) {
      Var term = mul(step_mse(iterates[m]), Var::scalar(w[m - 1] / total_w));
      l_mse = l_mse.defined() ? add(l_mse, term) : term;
    }
  } else {
    l_mse = step_mse(iterates.back());
  }

  // contrastive divergence + squared-energy regularization on the same
  // grouped potentials the sampler descended
  Var loss = l_mse;
  LossMetrics metrics;
  if (cfg.lambda_reg > 0.f) {
    Var x_neg = detach(iterates.back());
    Var e_pos, e_neg;
    for (const auto& mask : {&mask_a, &mask_b}) {
      if (mask == &mask_b && cfg.split_strategy == SplitStrategy::none) break;
      Var mv = Var::constant(*mask);
      Var ep = model.energy(gt, z, mv, B, Tw, N).sample_total;
      Var en = model.energy(x_neg, z, mv, B, Tw, N).sample_total;
      e_pos = e_pos.defined() ? add(e_pos, ep) : ep;
      e_neg = e_neg.defined() ? add(e_neg, en) : en;
    }
    Var l_cd = sub(mean_all(e_pos), mean_all(e_neg));
    Var l_e2 = add(mean_all(mul(e_pos, e_pos)), mean_all(mul(e_neg, e_neg)));
    loss = add(loss, mul(add(l_cd, l_e2), Var::scalar(cfg.lambda_reg)));
    metrics.cd = l_cd.item();
    metrics.energy_sq = l_e2.item();
    metrics.pos_energy = mean_all(e_pos).item();
    metrics.neg_energy = mean_all(e_neg).item();
  }

  if (!std::isfinite(loss.item()))
    throw NumericError("training loss is non-finite at seed " +
                       std::to_string(iter_seed));
  metrics.total = loss.item();
  metrics.mse = step_mse(iterates.back()).item();
  return {loss, metrics};
}

// Forecast MSE over the given dataset indices at the requested horizons
// (horizon h = h-th predicted step, 1-based). Shared by validation and the
// evaluation module.
inline std::map<int, double> forecast_mse(const Model& model,
                                          const TrajectoryDataset& ds,
                                          const std::vector<int>& indices,
                                          const SplitSpec& split, int m_steps,
                                          float step_size,
                                          const std::vector<int>& horizons,
                                          std::uint64_t seed = 0,
                                          int batch = 32) {
  if (indices.empty()) throw ConfigError("forecast_mse: no indices");
  const auto& t0 = ds.trajectories.at(indices[0]);
  const int T = t0.T, N = t0.N, D = t0.D;
  const int w0 = split.window_start();
  const int Tw = T - w0;

  std::map<int, double> sums;
  for (int h : horizons) {
    if (h > split.predicted_len())
      throw ConfigError("forecast_mse: horizon exceeds predicted length");
    sums[h] = 0.0;
  }

  std::int64_t count = 0;
  for (std::size_t at = 0; at < indices.size(); at += batch) {
    std::vector<int> chunk(indices.begin() + at,
                           indices.begin() + std::min(at + batch, indices.size()));
    const int B = static_cast<int>(chunk.size());
    Tensor x_full = detail::stack_batch(ds, chunk);
    Var x_obs = Var::constant(
        detail::slice_window_rows(x_full, B, T, N, D, 0, split.t_obs));
    Var z = model.encoder(x_obs, B, split.t_obs, N);
    Var mask = mask_to_var(EdgeMask::full(EdgeIndex::make(N).size(),
                                          model.cfg.n_latent),
                           B);

    Tensor gt_window = detail::slice_window_rows(x_full, B, T, N, D, w0, T);
    Tensor x0 = init_window(gt_window, B, Tw, N, D, split.t_init,
                            derive_seed(seed, at));
    SamplerConfig scfg;
    scfg.steps = m_steps;
    scfg.step_size = step_size;
    scfg.t_init = split.t_init;
    auto iterates =
        langevin({make_model_term(model.energy, z, mask, B, Tw, N)}, x0, scfg,
                 B, Tw, N);
    const Tensor& pred = iterates.back().value();

    for (int h : horizons) {
      const int t = split.t_init + h - 1;
      for (int b = 0; b < B; ++b)
        for (int n = 0; n < N; ++n)
          for (int d = 0; d < D; ++d) {
            const double diff = pred((b * Tw + t) * N + n, d) -
                                gt_window((b * Tw + t) * N + n, d);
            sums[h] += diff * diff;
          }
    }
    count += static_cast<std::int64_t>(B) * N * D;
  }
  for (auto& [h, s] : sums) s /= static_cast<double>(count);
  return sums;
}

struct TrainResult {
  Checkpoint best;
  Checkpoint last;
  std::vector<float> loss_history;
  std::map<int, double> best_val_mse;
};

// Training driver: encode -> noise init -> M Langevin steps -> loss ->
// Adam update, with the lr and M schedules applied per iteration and the
// best-on-validation parameters retained.
inline TrainResult train(const TrajectoryDataset& ds, const TrainConfig& cfg,
                         std::ostream* log = nullptr) {
  cfg.validate();
  ds.validate();
  if (ds.splits.train.empty()) throw ConfigError("train: empty train split");
  const auto& t0 = ds.trajectories.front();
  if (cfg.split.t_total != t0.T)
    throw ConfigError("train: split t_total does not match dataset T");

  Model model = Model::create(cfg.model, derive_seed(cfg.seed, 0xA11), ds.stats);
  Adam adam;
  adam.init(*model.params);

  Rng batch_rng(derive_seed(cfg.seed, 0xBA7C4));
  TrainResult result;
  result.loss_history.reserve(cfg.iterations);

  auto snapshot = [&](std::int64_t iter) {
    Checkpoint c;
    c.model_cfg = cfg.model;
    c.params = std::make_shared<ParamStore>();
    for (const auto& name : model.params->names())
      c.params->load(name, model.params->at(name).value());
    c.stats = ds.stats;
    c.iteration = iter;
    c.train_cfg_json = cfg.to_json().dump();
    c.opt = adam.state;
    return c;
  };

  double best_val = std::numeric_limits<double>::infinity();
  const std::vector<int> horizons = {1, 10, 20};
  std::vector<int> val_idx = ds.splits.val;
  if (static_cast<int>(val_idx.size()) > cfg.val_samples)
    val_idx.resize(cfg.val_samples);

  const auto& tref = ds.trajectories.front();
  for (int iter = 0; iter < cfg.iterations; ++iter) {
    std::vector<int> batch(cfg.batch_size);
    for (auto& b : batch)
      b = ds.splits.train[batch_rng.below(ds.splits.train.size())];
    Tensor x_full = detail::stack_batch(ds, batch);

    auto [loss, metrics] =
        training_loss(model, x_full, cfg.batch_size, tref.T, tref.N, cfg,
                      cfg.m_at(iter), derive_seed(cfg.seed, 7000 + iter));
    auto grads = grad(loss, model.params->all());
    std::vector<Tensor> gt;
    gt.reserve(grads.size());
    for (auto& g : grads) gt.push_back(g.value());
    adam.step(*model.params, gt, cfg.lr_at(iter));
    result.loss_history.push_back(metrics.total);

    const bool last = iter + 1 == cfg.iterations;
    if ((iter + 1) % cfg.val_every == 0 || last) {
      int val_h = std::min<int>(20, cfg.split.predicted_len());
      std::vector<int> hs;
      for (int h : horizons)
        if (h <= cfg.split.predicted_len()) hs.push_back(h);
      if (hs.empty()) hs.push_back(val_h);
      auto val = forecast_mse(model, ds, val_idx, cfg.split, cfg.m_end,
                              cfg.step_size, hs, cfg.seed);
      const double key = val.rbegin()->second;  // longest horizon
      if (log)
        *log << "iter " << iter + 1 << " loss " << metrics.total << " mse "
             << metrics.mse << " val@" << val.rbegin()->first << " " << key
             << "\n";
      if (key < best_val) {
        best_val = key;
        result.best = snapshot(iter + 1);
        result.best_val_mse = val;
      }
    } else if (log && (iter + 1) % 10 == 0) {
      *log << "iter " << iter + 1 << " loss " << metrics.total << " mse "
           << metrics.mse << "\n";
    }
  }
  result.last = snapshot(cfg.iterations);
  if (!result.best.params) {
    result.best = result.last;
  }
  return result;
}

}  // namespace relpot
