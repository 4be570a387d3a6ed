#pragma once

#include <array>
#include <optional>

#include "relpot/core/normalize.hpp"
#include "relpot/model/graph_layout.hpp"

namespace relpot {

// Hand-crafted test-time energy terms. All act on the predicted segment of
// the sampled window; goal/avoid act on positions accumulated from
// denormalized velocities, not on the state's position dims.
struct ExtraPotential {
  enum class Kind { velocity, goal, avoid_area };
  Kind kind = Kind::velocity;
  float strength = 0.f;  // epsilon; sign selects direction for velocity
  float weight = -1.f;   // lambda_w; negative -> per-kind default / N
  std::array<float, 3> goal{0.f, 0.f, 0.f};
  std::array<float, 3> area_min{0.f, 0.f, 0.f};
  std::array<float, 3> area_max{0.f, 0.f, 0.f};
  float margin = 0.1f;  // C

  float resolved_weight(int n_nodes) const {
    if (weight > 0.f) return weight;
    switch (kind) {
      case Kind::velocity: return 1e-2f / n_nodes;
      case Kind::goal: return 5e-4f / n_nodes;
      case Kind::avoid_area: return 1e-3f / n_nodes;
    }
    return 1.f;
  }

  void validate(int half_dim) const {
    if (kind == Kind::avoid_area)
      for (int d = 0; d < half_dim; ++d)
        if (!(area_min[d] < area_max[d]))
          throw ConfigError("avoid_area: box must satisfy min < max per axis");
  }
};

// Evaluation context for potentials that need raw units.
struct PotentialContext {
  NormStats stats;
  double dt_unit = 1.0;
  Tensor p0;  // [B*N, D/2] raw positions at the start of prediction
};

namespace detail {

// Accumulated raw positions per predicted step: list of [B*N, D/2] Vars.
inline std::vector<Var> accumulated_positions(const Var& x, int B, int Tw,
                                              int N, int D, int t_pred0,
                                              const PotentialContext& ctx) {
  const int half = D / 2;
  if (ctx.p0.rows() != B * N || ctx.p0.cols() != half)
    throw ShapeError("potential: p0 shape mismatch");
  Tensor vstd(1, half), vmean(1, half);
  for (int d = 0; d < half; ++d) {
    vstd.at(d) = ctx.stats.std[half + d];
    vmean.at(d) = ctx.stats.mean[half + d];
  }
  const float dt = static_cast<float>(ctx.dt_unit);

  std::vector<Var> positions;
  Var acc = Var::constant(ctx.p0);
  for (int t = t_pred0; t < Tw; ++t) {
    std::vector<int> rows(static_cast<std::size_t>(B) * N);
    std::size_t w = 0;
    for (int b = 0; b < B; ++b)
      for (int n = 0; n < N; ++n) rows[w++] = (b * Tw + t) * N + n;
    Var v_norm = slice_cols(gather_rows(x, rows), half, D);
    Var v_raw = add(mul(v_norm, Var::constant(vstd)), Var::constant(vmean));
    acc = add(acc, mul(v_raw, Var::scalar(dt)));
    positions.push_back(acc);
  }
  return positions;
}

}  // namespace detail

// E = eps * lambda_w * sum_i,t |v_i^t| over predicted steps (normalized
// velocities; a small epsilon inside the root handles the kink at 0).
inline Var velocity_potential_energy(const ExtraPotential& pot, const Var& x,
                                     int B, int Tw, int N, int D,
                                     int t_pred0) {
  const int half = D / 2;
  std::vector<int> rows;
  rows.reserve(static_cast<std::size_t>(B) * (Tw - t_pred0) * N);
  for (int b = 0; b < B; ++b)
    for (int t = t_pred0; t < Tw; ++t)
      for (int n = 0; n < N; ++n) rows.push_back((b * Tw + t) * N + n);
  Var v = slice_cols(gather_rows(x, rows), half, D);
  Var speed = sqrt(add(sum_cols(mul(v, v)), Var::scalar(1e-12f)));
  return mul(sum_all(speed),
             Var::scalar(pot.strength * pot.resolved_weight(N)));
}

// P = eps * lambda_w * sum_i,t (p~_i^t - g)^2 on accumulated positions.
inline Var goal_potential_energy(const ExtraPotential& pot, const Var& x,
                                 int B, int Tw, int N, int D, int t_pred0,
                                 const PotentialContext& ctx) {
  const int half = D / 2;
  Tensor g(1, half);
  for (int d = 0; d < half; ++d) g.at(d) = pot.goal[d];
  Var total = Var::scalar(0.f);
  for (const Var& p :
       detail::accumulated_positions(x, B, Tw, N, D, t_pred0, ctx)) {
    Var d = sub(p, Var::constant(g));
    total = add(total, sum_all(mul(d, d)));
  }
  return mul(total, Var::scalar(pot.strength * pot.resolved_weight(N)));
}

// P = eps * lambda_w * sum (depth + C)^2 over predicted positions inside the
// box; depth is the distance to the nearest face, zero contribution outside.
inline Var avoid_area_potential_energy(const ExtraPotential& pot, const Var& x,
                                       int B, int Tw, int N, int D,
                                       int t_pred0,
                                       const PotentialContext& ctx) {
  const int half = D / 2;
  pot.validate(half);
  Var total = Var::scalar(0.f);
  for (const Var& p :
       detail::accumulated_positions(x, B, Tw, N, D, t_pred0, ctx)) {
    Var depth;  // min over axes of distance to the two faces
    for (int d = 0; d < half; ++d) {
      Var pd = slice_cols(p, d, d + 1);
      Var lo = sub(pd, Var::scalar(pot.area_min[d]));
      Var hi = sub(Var::scalar(pot.area_max[d]), pd);
      Var axis = minimum(lo, hi);
      depth = depth.defined() ? minimum(depth, axis) : axis;
    }
    // indicator(inside) from the current values; locally constant
    Tensor inside(depth.rows(), 1);
    for (int r = 0; r < depth.rows(); ++r)
      inside.at(r) = depth.value().at(r) > 0.f ? 1.f : 0.f;
    Var pen = add(depth, Var::scalar(pot.margin));
    total = add(total, sum_all(mul(Var::constant(inside), mul(pen, pen))));
  }
  return mul(total, Var::scalar(pot.strength * pot.resolved_weight(N)));
}

inline Var extra_potential_energy(const ExtraPotential& pot, const Var& x,
                                  int B, int Tw, int N, int D, int t_pred0,
                                  const PotentialContext& ctx) {
  switch (pot.kind) {
    case ExtraPotential::Kind::velocity:
      return velocity_potential_energy(pot, x, B, Tw, N, D, t_pred0);
    case ExtraPotential::Kind::goal:
      return goal_potential_energy(pot, x, B, Tw, N, D, t_pred0, ctx);
    case ExtraPotential::Kind::avoid_area:
      return avoid_area_potential_energy(pot, x, B, Tw, N, D, t_pred0, ctx);
  }
  throw ConfigError("unknown extra potential kind");
}

// ---- spec-level single-trajectory wrappers (window = whole trajectory) -----

inline float velocity_potential(const Trajectory& x, const ExtraPotential& pot,
                                int t_pred0 = 0) {
  return velocity_potential_energy(pot, Var::constant(x.matrix()), 1, x.T, x.N,
                                   x.D, t_pred0)
      .item();
}

inline float goal_potential(const Trajectory& x, const ExtraPotential& pot,
                            const PotentialContext& ctx, int t_pred0 = 0) {
  return goal_potential_energy(pot, Var::constant(x.matrix()), 1, x.T, x.N,
                               x.D, t_pred0, ctx)
      .item();
}

inline float avoid_area_potential(const Trajectory& x,
                                  const ExtraPotential& pot,
                                  const PotentialContext& ctx,
                                  int t_pred0 = 0) {
  return avoid_area_potential_energy(pot, Var::constant(x.matrix()), 1, x.T,
                                     x.N, x.D, t_pred0, ctx)
      .item();
}

}  // namespace relpot
