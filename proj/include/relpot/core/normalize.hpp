#pragma once

#include "relpot/core/trajectory.hpp"

namespace relpot {

inline Trajectory normalize(const Trajectory& traj, const NormStats& stats) {
  if (!traj.raw) throw ConfigError("normalize: trajectory already normalized");
  stats.validate();
  if (stats.dims() != traj.D) throw ShapeError("normalize: dim mismatch");
  Trajectory out = traj;
  out.raw = false;
  for (int t = 0; t < traj.T; ++t)
    for (int n = 0; n < traj.N; ++n)
      for (int d = 0; d < traj.D; ++d)
        out.at(t, n, d) = (traj.at(t, n, d) - stats.mean[d]) / stats.std[d];
  return out;
}

inline Trajectory denormalize(const Trajectory& traj, const NormStats& stats) {
  if (traj.raw) throw ConfigError("denormalize: trajectory already raw");
  stats.validate();
  if (stats.dims() != traj.D) throw ShapeError("denormalize: dim mismatch");
  Trajectory out = traj;
  out.raw = true;
  for (int t = 0; t < traj.T; ++t)
    for (int n = 0; n < traj.N; ++n)
      for (int d = 0; d < traj.D; ++d)
        out.at(t, n, d) = traj.at(t, n, d) * stats.std[d] + stats.mean[d];
  return out;
}

// Statistics of the first `t_lim` states across the given trajectories.
inline NormStats compute_stats(const std::vector<Trajectory>& trajs,
                               const std::vector<int>& indices, int t_lim) {
  if (indices.empty()) throw ConfigError("compute_stats: no trajectories");
  const int D = trajs[indices[0]].D;
  std::vector<double> sum(D, 0.0), sq(D, 0.0);
  std::int64_t count = 0;
  for (int i : indices) {
    const auto& tr = trajs[i];
    const int tmax = std::min(t_lim, tr.T);
    for (int t = 0; t < tmax; ++t)
      for (int n = 0; n < tr.N; ++n)
        for (int d = 0; d < D; ++d) {
          const double v = tr.at(t, n, d);
          sum[d] += v;
          sq[d] += v * v;
        }
    count += static_cast<std::int64_t>(tmax) * tr.N;
  }
  NormStats s;
  s.mean.resize(D);
  s.std.resize(D);
  for (int d = 0; d < D; ++d) {
    const double m = sum[d] / count;
    const double var = std::max(sq[d] / count - m * m, 1e-12);
    s.mean[d] = static_cast<float>(m);
    s.std[d] = static_cast<float>(std::sqrt(var));
  }
  return s;
}

// Accumulated raw positions from normalized velocities:
//   p~[0] = p0,  p~[t+1] = p~[t] + v_raw[t] * dt_unit.
// Output is [T, N, D/2], matching the trajectory plotting convention.
inline std::vector<float> positions_from_velocities(const Trajectory& traj,
                                                    const std::vector<float>& p0,
                                                    const NormStats& stats,
                                                    double dt_unit) {
  if (traj.raw) throw ConfigError("positions_from_velocities: expects normalized input");
  stats.validate();
  if (stats.dims() != traj.D)
    throw ShapeError("positions_from_velocities: stats dim mismatch");
  const int half = traj.D / 2;
  if (p0.size() != static_cast<std::size_t>(traj.N) * half)
    throw ShapeError("positions_from_velocities: p0 size mismatch");

  std::vector<float> out(static_cast<std::size_t>(traj.T) * traj.N * half);
  std::vector<double> acc(p0.begin(), p0.end());
  for (int t = 0; t < traj.T; ++t) {
    for (int n = 0; n < traj.N; ++n)
      for (int d = 0; d < half; ++d)
        out[(static_cast<std::size_t>(t) * traj.N + n) * half + d] =
            static_cast<float>(acc[static_cast<std::size_t>(n) * half + d]);
    for (int n = 0; n < traj.N; ++n)
      for (int d = 0; d < half; ++d) {
        const int vd = half + d;
        const double v_raw =
            traj.at(t, n, vd) * stats.std[vd] + stats.mean[vd];
        acc[static_cast<std::size_t>(n) * half + d] += v_raw * dt_unit;
      }
  }
  return out;
}

}  // namespace relpot
