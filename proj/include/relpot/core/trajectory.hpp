#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "relpot/ad/tensor.hpp"
#include "relpot/util/errors.hpp"

namespace relpot {

// Particle states over time, [T, N, D] with positions in dims [0, D/2) and
// velocities in [D/2, D). `raw` marks simulator units, cleared by normalize().
struct Trajectory {
  int T = 0, N = 0, D = 0;
  bool raw = true;
  std::vector<float> states;  // row-major [T][N][D]

  Trajectory() = default;
  Trajectory(int t, int n, int d, bool raw_ = true)
      : T(t), N(n), D(d), raw(raw_),
        states(static_cast<std::size_t>(t) * n * d, 0.f) {}

  float& at(int t, int n, int d) {
    return states[(static_cast<std::size_t>(t) * N + n) * D + d];
  }
  float at(int t, int n, int d) const {
    return states[(static_cast<std::size_t>(t) * N + n) * D + d];
  }

  void validate() const {
    if (T < 1) throw ShapeError("Trajectory: T must be >= 1");
    if (N < 2) throw ShapeError("Trajectory: N must be >= 2");
    if (D != 4 && D != 6) throw ShapeError("Trajectory: D must be 4 or 6");
    if (states.size() != static_cast<std::size_t>(T) * N * D)
      throw ShapeError("Trajectory: state buffer size mismatch");
    for (float v : states)
      if (!std::isfinite(v)) throw NumericError("Trajectory: non-finite state");
  }

  // Rows ordered (t, n); the layout every model module consumes.
  Tensor matrix() const {
    return Tensor(T * N, D, states);
  }
  static Trajectory from_matrix(const Tensor& m, int T, int N, int D,
                                bool raw) {
    if (m.rows() != T * N || m.cols() != D)
      throw ShapeError("Trajectory::from_matrix: shape mismatch");
    Trajectory out(T, N, D, raw);
    std::copy(m.data(), m.data() + m.size(), out.states.begin());
    return out;
  }

  Trajectory slice_time(int t0, int t1) const {
    if (t0 < 0 || t1 > T || t0 >= t1) throw ShapeError("slice_time: range");
    Trajectory out(t1 - t0, N, D, raw);
    std::copy(states.begin() + static_cast<std::size_t>(t0) * N * D,
              states.begin() + static_cast<std::size_t>(t1) * N * D,
              out.states.begin());
    return out;
  }
};

// How a trajectory is carved up: observe [0, T_obs), clamp T_init states at
// the start of the generated window, predict through T_total.
struct SplitSpec {
  int t_obs = 0;
  int t_init = 1;
  int t_total = 0;
  // Start of the generated window; defaults to t_obs (forecasting). Set to 0
  // for full-reconstruction configs.
  int gen_start = -1;

  int window_start() const { return gen_start >= 0 ? gen_start : t_obs; }
  int window_len() const { return t_total - window_start(); }
  int predicted_len() const { return window_len() - t_init; }

  void validate() const {
    if (t_init < 1) throw ConfigError("SplitSpec: t_init must be >= 1");
    if (t_obs > t_total) throw ConfigError("SplitSpec: t_obs > t_total");
    if (t_init > t_total) throw ConfigError("SplitSpec: t_init > t_total");
    if (window_start() < 0 || window_start() + t_init > t_total)
      throw ConfigError("SplitSpec: generated window out of range");
  }
};

// Per-dimension statistics used to map raw trajectories to model units.
struct NormStats {
  std::vector<float> mean, std;

  int dims() const { return static_cast<int>(mean.size()); }
  void validate() const {
    if (mean.size() != std.size()) throw ShapeError("NormStats: size mismatch");
    for (float s : std)
      if (!(s > 0.f) || !std::isfinite(s))
        throw NumericError("NormStats: std must be finite and > 0");
    for (float m : mean)
      if (!std::isfinite(m)) throw NumericError("NormStats: non-finite mean");
  }
};

// Canonical ordering of the N(N-1) directed edges: row-major over (i, j)
// skipping the diagonal. Shared by the encoder and the energy networks.
struct EdgeIndex {
  int n_nodes = 0;
  std::vector<std::pair<int, int>> pairs;  // (sender, receiver)

  static EdgeIndex make(int n) {
    if (n < 2) throw ShapeError("EdgeIndex: need at least 2 nodes");
    EdgeIndex e;
    e.n_nodes = n;
    e.pairs.reserve(static_cast<std::size_t>(n) * (n - 1));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (i != j) e.pairs.emplace_back(i, j);
    return e;
  }

  int size() const { return static_cast<int>(pairs.size()); }

  int index_of(int i, int j) const {
    if (i == j || i < 0 || j < 0 || i >= n_nodes || j >= n_nodes)
      throw ShapeError("EdgeIndex: bad pair");
    return i * (n_nodes - 1) + (j < i ? j : j - 1);
  }
};

// Ground-truth interaction structure emitted by the simulators.
struct RelationLabels {
  enum class Kind { springs_adjacency, charges, mixed_force_type };
  Kind kind = Kind::springs_adjacency;
  // springs_adjacency: N*N symmetric 0/1; charges: N entries of +-q;
  // mixed_force_type: N entries, 0 = spring-driven, 1 = charge-driven.
  std::vector<float> values;
};

struct DatasetSplits {
  std::vector<int> train, val, test;
};

struct TrajectoryDataset {
  std::vector<Trajectory> trajectories;
  std::vector<RelationLabels> labels;
  NormStats stats;
  DatasetSplits splits;
  std::string kind;       // springs | charged | mixed | horizons
  std::uint64_t seed = 0;
  double dt_unit = 1.0;   // effective step between stored states, raw units
  std::string meta_json;  // generator config, serialized

  int num() const { return static_cast<int>(trajectories.size()); }

  void validate() const {
    if (trajectories.empty()) throw ShapeError("dataset: empty");
    const auto& t0 = trajectories.front();
    for (const auto& t : trajectories) {
      if (t.T != t0.T || t.N != t0.N || t.D != t0.D)
        throw ShapeError("dataset: inconsistent trajectory shapes");
    }
    if (!labels.empty() && labels.size() != trajectories.size())
      throw ShapeError("dataset: label count mismatch");
    std::vector<char> seen(trajectories.size(), 0);
    for (const auto* split : {&splits.train, &splits.val, &splits.test})
      for (int i : *split) {
        if (i < 0 || i >= num()) throw ShapeError("dataset: split index range");
        if (seen[i]++) throw ShapeError("dataset: splits overlap");
      }
    for (char c : seen)
      if (!c) throw ShapeError("dataset: splits not exhaustive");
  }
};

}  // namespace relpot
