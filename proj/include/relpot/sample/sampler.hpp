#pragma once

#include <functional>

#include "relpot/model/energy.hpp"
#include "relpot/sample/potentials.hpp"

namespace relpot {

struct SamplerConfig {
  int steps = 5;          // M
  float step_size = 0.4f; // lambda
  float noise = 0.f;      // sigma (0 by default)
  int t_init = 1;         // clamped leading states of the window
  bool clip_grad = false;
  float clip_norm = 1e3f;
  float divergence_guard = 1e6f;
  std::optional<std::pair<float, float>> value_clamp;  // optional range clamp

  void validate() const {
    if (steps < 0) throw ConfigError("sampler: steps must be >= 0");
    if (!(step_size > 0)) throw ConfigError("sampler: step size must be > 0");
    if (noise < 0) throw ConfigError("sampler: noise must be >= 0");
    if (t_init < 0) throw ConfigError("sampler: t_init must be >= 0");
  }
};

// A differentiable energy term over the sampled window.
using TermFn = std::function<Var(const Var& x)>;

inline TermFn make_model_term(const EnergyNets& nets, Var z, Var mask, int B,
                              int Tw, int N, float weight = 1.f) {
  return [&nets, z = std::move(z), mask = std::move(mask), B, Tw, N,
          weight](const Var& x) {
    Var e = sum_all(nets(x, z, mask, B, Tw, N).sample_total);
    return weight == 1.f ? e : mul(e, Var::scalar(weight));
  };
}

inline TermFn make_extra_term(const ExtraPotential& pot, int B, int Tw, int N,
                              int D, int t_pred0, PotentialContext ctx) {
  return [pot, B, Tw, N, D, t_pred0, ctx = std::move(ctx)](const Var& x) {
    return extra_potential_energy(pot, x, B, Tw, N, D, t_pred0, ctx);
  };
}

// Window initialization: clamped states copied from the ground truth, the
// predicted segment i.i.d. Uniform(0,1) in normalized units.
inline Tensor init_window(const Tensor& gt_window, int B, int Tw, int N, int D,
                          int t_init, std::uint64_t seed) {
  if (gt_window.rows() != B * Tw * N || gt_window.cols() != D)
    throw ShapeError("init_window: ground-truth window shape mismatch");
  if (t_init > Tw) throw ShapeError("init_window: t_init exceeds window");
  Rng rng(seed);
  Tensor x = gt_window;
  for (int b = 0; b < B; ++b)
    for (int t = t_init; t < Tw; ++t)
      for (int n = 0; n < N; ++n)
        for (int d = 0; d < D; ++d)
          x((b * Tw + t) * N + n, d) = static_cast<float>(rng.uniform());
  return x;
}

// 0 on clamped rows, 1 on sampled rows.
inline Tensor free_mask(int B, int Tw, int N, int t_init) {
  Tensor m(B * Tw * N, 1, 0.f);
  for (int b = 0; b < B; ++b)
    for (int t = t_init; t < Tw; ++t)
      for (int n = 0; n < N; ++n) m.at((b * Tw + t) * N + n) = 1.f;
  return m;
}

// Langevin descent on the summed energy of all terms. Gradients only touch
// the non-clamped rows, so clamped states stay bit-equal to the ground truth
// at every step. With track=true the returned iterates form one graph and the
// whole chain is differentiable; with track=false each step starts from a
// fresh leaf.
inline std::vector<Var> langevin(const std::vector<TermFn>& terms,
                                 const Tensor& x0, const SamplerConfig& cfg,
                                 int B, int Tw, int N, std::uint64_t seed = 0,
                                 bool track = false) {
  cfg.validate();
  if (terms.empty()) throw ConfigError("langevin: no energy terms");
  const int D = x0.cols();
  Var free = Var::constant(free_mask(B, Tw, N, cfg.t_init));
  Rng rng(seed);

  std::vector<Var> iterates;
  iterates.reserve(cfg.steps + 1);
  Var x = Var::leaf(x0, true);
  iterates.push_back(x);

  for (int m = 1; m <= cfg.steps; ++m) {
    Var energy;
    for (const auto& term : terms) {
      Var e = term(x);
      if (e.value().size() != 1) e = sum_all(e);
      energy = energy.defined() ? add(energy, e) : e;
    }
    Var g = grad(energy, {x})[0];
    if (!g.value().all_finite())
      throw NumericError("langevin: non-finite gradient at step " +
                         std::to_string(m));
    if (cfg.clip_grad) {
      const double norm = std::sqrt(
          Var::constant(g.value()).value().map().cast<double>().squaredNorm());
      if (norm > cfg.clip_norm)
        g = mul(g, Var::scalar(static_cast<float>(cfg.clip_norm / norm)));
    }

    Var step = mul(mul(g, free), Var::scalar(-0.5f * cfg.step_size));
    Var next = add(x, step);
    if (cfg.noise > 0.f) {
      Tensor w(next.rows(), D);
      for (std::int64_t i = 0; i < w.size(); ++i)
        w.at(i) = static_cast<float>(rng.normal(0.0, cfg.noise));
      next = add(next, mul(Var::constant(w), free));
    }
    if (cfg.value_clamp) {
      next = maximum(minimum(next, Var::scalar(cfg.value_clamp->second)),
                     Var::scalar(cfg.value_clamp->first));
    }
    if (next.value().max_abs() > cfg.divergence_guard)
      throw NumericError("langevin: state diverged at step " +
                         std::to_string(m));

    x = track ? next : Var::leaf(next.value(), true);
    iterates.push_back(x);
  }
  return iterates;
}

// Joint sampling from several conditioned models (product of experts: the
// gradients of all masked energies add).
struct ModelTerm {
  const EnergyNets* nets = nullptr;
  LatentSet latents;
  EdgeMask mask;
  float weight = 1.f;
};

inline std::vector<Var> compose_models(const std::vector<ModelTerm>& models,
                                       const Tensor& x0,
                                       const SamplerConfig& cfg, int B, int Tw,
                                       int N, std::uint64_t seed = 0) {
  if (models.empty()) throw ConfigError("compose_models: no models");
  std::vector<TermFn> terms;
  for (const auto& mt : models) {
    if (mt.nets == nullptr) throw ConfigError("compose_models: null model");
    terms.push_back(make_model_term(*mt.nets, latents_to_var(mt.latents),
                                    mask_to_var(mt.mask), B, Tw, N,
                                    mt.weight));
  }
  return langevin(terms, x0, cfg, B, Tw, N, seed);
}

}  // namespace relpot
