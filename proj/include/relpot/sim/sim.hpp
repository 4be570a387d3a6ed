#pragma once

#include <json.hpp>

#include "relpot/core/normalize.hpp"
#include "relpot/core/trajectory.hpp"
#include "relpot/util/rng.hpp"

namespace relpot {

enum class SimKind { springs, charged, mixed };

inline const char* to_string(SimKind k) {
  switch (k) {
    case SimKind::springs: return "springs";
    case SimKind::charged: return "charged";
    case SimKind::mixed: return "mixed";
  }
  return "?";
}

struct SimConfig {
  int n_particles = 5;
  int n_steps = 70;          // sampled states
  SimKind kind = SimKind::springs;
  double spring_k = 5.0;     // Hooke constant (0.1 in the recombination variant)
  double charge_c = 1.0;     // Coulomb scale (0.5 in the recombination variant)
  double connection_prob = 0.5;
  double charge_prob = 0.5;  // probability of +q
  double box_half_width = 5.0;  // <= 0 disables walls
  double dt = 1e-3;
  int subsample = 100;
  double softening = 0.01;   // added to r^2 in the Coulomb denominator
  std::uint64_t seed = 0;

  void validate() const {
    if (n_particles < 2) throw ConfigError("sim: need at least 2 particles");
    if (n_steps < 2) throw ConfigError("sim: need at least 2 sampled steps");
    if (connection_prob < 0 || connection_prob > 1 || charge_prob < 0 ||
        charge_prob > 1)
      throw ConfigError("sim: probabilities must be in [0,1]");
    if (dt <= 0) throw ConfigError("sim: dt must be > 0");
    if (subsample < 1) throw ConfigError("sim: subsample must be >= 1");
    if (softening < 0) throw ConfigError("sim: softening must be >= 0");
  }

  nlohmann::ordered_json to_json() const {
    return {{"n_particles", n_particles}, {"n_steps", n_steps},
            {"kind", to_string(kind)},    {"spring_k", spring_k},
            {"charge_c", charge_c},       {"connection_prob", connection_prob},
            {"charge_prob", charge_prob}, {"box_half_width", box_half_width},
            {"dt", dt},                   {"subsample", subsample},
            {"softening", softening},     {"seed", seed}};
  }
};

namespace sim {

constexpr int kDims = 2;

enum class ForceLaw { spring, charged };

// Fully drawn initial conditions and interaction structure. Unit masses.
struct System {
  std::vector<double> pos, vel;      // [N][2]
  std::vector<float> adjacency;      // [N][N] symmetric 0/1
  std::vector<float> charges;        // [N] of +-1
  std::vector<ForceLaw> laws;        // [N] per-node force law
};

inline System draw_system(const SimConfig& cfg, Rng& rng) {
  const int n = cfg.n_particles;
  System s;
  s.pos.resize(n * kDims);
  s.vel.resize(n * kDims);
  s.adjacency.assign(static_cast<std::size_t>(n) * n, 0.f);
  s.charges.resize(n);
  s.laws.assign(n, cfg.kind == SimKind::charged ? ForceLaw::charged
                                                : ForceLaw::spring);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < kDims; ++d) s.pos[i * kDims + d] = rng.normal(0.0, 0.5);
  for (int i = 0; i < n; ++i) {
    double v[kDims], norm = 0;
    for (int d = 0; d < kDims; ++d) {
      v[d] = rng.normal();
      norm += v[d] * v[d];
    }
    norm = std::sqrt(std::max(norm, 1e-12));
    for (int d = 0; d < kDims; ++d) s.vel[i * kDims + d] = 0.5 * v[d] / norm;
  }
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (rng.bernoulli(cfg.connection_prob))
        s.adjacency[i * n + j] = s.adjacency[j * n + i] = 1.f;
  for (int i = 0; i < n; ++i)
    s.charges[i] = rng.bernoulli(cfg.charge_prob) ? 1.f : -1.f;
  if (cfg.kind == SimKind::mixed)
    for (int i = 0; i < n; ++i)
      s.laws[i] = rng.bernoulli(0.5) ? ForceLaw::spring : ForceLaw::charged;
  return s;
}

// Force exerted on node i by node j under i's own law.
inline void pair_force(ForceLaw law_i, const double* pi, const double* pj,
                       float a_ij, float qi, float qj, const SimConfig& cfg,
                       double* f_ij) {
  double d[kDims], r2 = 0;
  for (int k = 0; k < kDims; ++k) {
    d[k] = pi[k] - pj[k];
    r2 += d[k] * d[k];
  }
  if (law_i == ForceLaw::spring) {
    for (int k = 0; k < kDims; ++k)
      f_ij[k] = a_ij != 0.f ? -cfg.spring_k * d[k] : 0.0;
  } else {
    const double scale =
        cfg.charge_c * qi * qj / std::pow(r2 + cfg.softening, 1.5);
    for (int k = 0; k < kDims; ++k) f_ij[k] = scale * d[k];
  }
}

// Net force on every node; each node's force follows its own law, so the
// mixed system reduces exactly to the pure ones under uniform labels.
inline void compute_forces(const System& s, const SimConfig& cfg,
                           std::vector<double>& f) {
  const int n = cfg.n_particles;
  f.assign(n * kDims, 0.0);
  double fij[kDims];
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      pair_force(s.laws[i], &s.pos[i * kDims], &s.pos[j * kDims],
                 s.adjacency[i * n + j], s.charges[i], s.charges[j], cfg, fij);
      for (int k = 0; k < kDims; ++k) f[i * kDims + k] += fij[k];
    }
  }
}

inline void reflect_walls(System& s, const SimConfig& cfg) {
  if (cfg.box_half_width <= 0) return;
  const double b = cfg.box_half_width;
  for (std::size_t i = 0; i < s.pos.size(); ++i) {
    while (s.pos[i] > b || s.pos[i] < -b) {
      if (s.pos[i] > b)
        s.pos[i] = 2 * b - s.pos[i];
      else
        s.pos[i] = -2 * b - s.pos[i];
      s.vel[i] = -s.vel[i];
    }
  }
}

// Velocity-Verlet (synchronized leapfrog); symplectic, so the conservation
// oracles in the tests hold at small dt. `s` is left at the final state,
// which keeps conservation measurable in double precision (the recorded
// trajectory is float32).
inline Trajectory integrate(System& s, const SimConfig& cfg) {
  const int n = cfg.n_particles;
  Trajectory traj(cfg.n_steps, n, 2 * kDims, /*raw=*/true);
  std::vector<double> f, f_next;
  compute_forces(s, cfg, f);

  auto record = [&](int step) {
    for (int i = 0; i < n; ++i) {
      for (int d = 0; d < kDims; ++d) {
        traj.at(step, i, d) = static_cast<float>(s.pos[i * kDims + d]);
        traj.at(step, i, kDims + d) = static_cast<float>(s.vel[i * kDims + d]);
      }
    }
  };

  record(0);
  for (int step = 1; step < cfg.n_steps; ++step) {
    for (int sub = 0; sub < cfg.subsample; ++sub) {
      for (std::size_t i = 0; i < s.pos.size(); ++i) {
        s.vel[i] += 0.5 * cfg.dt * f[i];
        s.pos[i] += cfg.dt * s.vel[i];
      }
      reflect_walls(s, cfg);
      compute_forces(s, cfg, f_next);
      for (std::size_t i = 0; i < s.vel.size(); ++i)
        s.vel[i] += 0.5 * cfg.dt * f_next[i];
      f.swap(f_next);
    }
    record(step);
  }
  return traj;
}

inline double kinetic_energy(const System& s) {
  double e = 0;
  for (double v : s.vel) e += 0.5 * v * v;
  return e;
}

inline double spring_potential_energy(const System& s, const SimConfig& cfg) {
  const int n = cfg.n_particles;
  double e = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (s.adjacency[i * n + j] == 0.f) continue;
      double r2 = 0;
      for (int k = 0; k < kDims; ++k) {
        const double d = s.pos[i * kDims + k] - s.pos[j * kDims + k];
        r2 += d * d;
      }
      e += 0.5 * cfg.spring_k * r2;
    }
  return e;
}

}  // namespace sim

inline std::pair<Trajectory, RelationLabels> simulate_springs(
    const SimConfig& cfg) {
  cfg.validate();
  if (cfg.kind != SimKind::springs)
    throw ConfigError("simulate_springs: cfg.kind must be springs");
  Rng rng(cfg.seed);
  sim::System s = sim::draw_system(cfg, rng);
  RelationLabels labels;
  labels.kind = RelationLabels::Kind::springs_adjacency;
  labels.values = s.adjacency;
  return {sim::integrate(s, cfg), std::move(labels)};
}

inline std::pair<Trajectory, RelationLabels> simulate_charged(
    const SimConfig& cfg) {
  cfg.validate();
  if (cfg.kind != SimKind::charged)
    throw ConfigError("simulate_charged: cfg.kind must be charged");
  Rng rng(cfg.seed);
  sim::System s = sim::draw_system(cfg, rng);
  RelationLabels labels;
  labels.kind = RelationLabels::Kind::charges;
  labels.values = s.charges;
  return {sim::integrate(s, cfg), std::move(labels)};
}

inline std::pair<Trajectory, RelationLabels> simulate_mixed(
    const SimConfig& cfg) {
  cfg.validate();
  if (cfg.kind != SimKind::mixed)
    throw ConfigError("simulate_mixed: cfg.kind must be mixed");
  Rng rng(cfg.seed);
  sim::System s = sim::draw_system(cfg, rng);
  RelationLabels labels;
  labels.kind = RelationLabels::Kind::mixed_force_type;
  labels.values.resize(cfg.n_particles);
  for (int i = 0; i < cfg.n_particles; ++i)
    labels.values[i] = s.laws[i] == sim::ForceLaw::charged ? 1.f : 0.f;
  return {sim::integrate(s, cfg), std::move(labels)};
}

inline std::pair<Trajectory, RelationLabels> simulate(const SimConfig& cfg) {
  switch (cfg.kind) {
    case SimKind::springs: return simulate_springs(cfg);
    case SimKind::charged: return simulate_charged(cfg);
    case SimKind::mixed: return simulate_mixed(cfg);
  }
  throw ConfigError("simulate: bad kind");
}

struct SplitCounts {
  int train = 1, val = 1, test = 1;
};

// Generates counts.train + counts.val + counts.test trajectories with seeds
// derived from cfg.seed, normalizes with train statistics over the first
// `stats_t_lim` states, and stores everything normalized.
inline TrajectoryDataset make_dataset(const SimConfig& cfg, SplitCounts counts,
                                      int stats_t_lim = 49) {
  cfg.validate();
  if (counts.train < 1 || counts.val < 1 || counts.test < 1)
    throw ConfigError("make_dataset: all split counts must be >= 1");

  TrajectoryDataset ds;
  ds.kind = to_string(cfg.kind);
  ds.seed = cfg.seed;
  ds.dt_unit = cfg.dt * cfg.subsample;
  const int total = counts.train + counts.val + counts.test;
  for (int i = 0; i < total; ++i) {
    SimConfig c = cfg;
    c.seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(i));
    auto [traj, labels] = simulate(c);
    ds.trajectories.push_back(std::move(traj));
    ds.labels.push_back(std::move(labels));
  }
  for (int i = 0; i < counts.train; ++i) ds.splits.train.push_back(i);
  for (int i = 0; i < counts.val; ++i)
    ds.splits.val.push_back(counts.train + i);
  for (int i = 0; i < counts.test; ++i)
    ds.splits.test.push_back(counts.train + counts.val + i);

  ds.stats = compute_stats(ds.trajectories, ds.splits.train,
                           std::min(stats_t_lim, cfg.n_steps));
  for (auto& tr : ds.trajectories) tr = normalize(tr, ds.stats);

  nlohmann::ordered_json meta;
  meta["generator"] = cfg.to_json();
  meta["stats_t_lim"] = std::min(stats_t_lim, cfg.n_steps);
  ds.meta_json = meta.dump();
  ds.validate();
  return ds;
}

}  // namespace relpot
