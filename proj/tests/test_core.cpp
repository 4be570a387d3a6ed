#include <catch2/catch_amalgamated.hpp>
#include <filesystem>
#include <fstream>

#include "relpot/core/dataset.hpp"
#include "relpot/core/normalize.hpp"
#include "relpot/sim/sim.hpp"

using namespace relpot;
namespace fs = std::filesystem;

namespace {

Trajectory random_raw(int T, int N, int D, std::uint64_t seed) {
  Rng rng(seed);
  Trajectory t(T, N, D, true);
  for (auto& v : t.states) v = static_cast<float>(rng.normal(0.3, 1.7));
  return t;
}

std::vector<char> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST_CASE("normalize identity and constant cases") {
  NormStats ident{{0, 0, 0, 0}, {1, 1, 1, 1}};
  Trajectory t = random_raw(6, 3, 4, 11);
  Trajectory n = normalize(t, ident);
  REQUIRE_FALSE(n.raw);
  for (std::size_t i = 0; i < t.states.size(); ++i)
    REQUIRE(n.states[i] == t.states[i]);

  NormStats s{{1.f, -2.f, 0.5f, 3.f}, {2.f, 2.f, 2.f, 2.f}};
  Trajectory c(4, 2, 4, true);
  for (int t2 = 0; t2 < 4; ++t2)
    for (int n2 = 0; n2 < 2; ++n2)
      for (int d = 0; d < 4; ++d) c.at(t2, n2, d) = s.mean[d];
  Trajectory z = normalize(c, s);
  for (float v : z.states) REQUIRE(v == 0.f);
}

TEST_CASE("normalize round trip within 1e-6") {
  NormStats s{{0.2f, -1.f, 3.f, 0.f}, {0.7f, 2.5f, 1.1f, 4.f}};
  Trajectory t = random_raw(10, 4, 4, 12);
  Trajectory back = denormalize(normalize(t, s), s);
  for (std::size_t i = 0; i < t.states.size(); ++i)
    REQUIRE(std::fabs(back.states[i] - t.states[i]) < 1e-6f);
}

TEST_CASE("normalize rejects bad stats and dims") {
  Trajectory t = random_raw(3, 2, 4, 13);
  REQUIRE_THROWS_AS(normalize(t, NormStats{{0, 0}, {1, 1}}), ShapeError);
  REQUIRE_THROWS_AS(normalize(t, NormStats{{0, 0, 0, 0}, {1, 0, 1, 1}}),
                    NumericError);
}

TEST_CASE("positions_from_velocities") {
  NormStats s{{0, 0, 0.1f, -0.2f}, {1, 1, 0.5f, 2.f}};
  const int T = 7, N = 3;

  SECTION("zero raw velocities keep p0") {
    Trajectory t(T, N, 4, true);
    for (int step = 0; step < T; ++step)
      for (int n = 0; n < N; ++n)
        for (int d = 2; d < 4; ++d) t.at(step, n, d) = 0.f;
    Trajectory norm = normalize(t, s);
    std::vector<float> p0 = {1, 2, 3, 4, 5, 6};
    auto pos = positions_from_velocities(norm, p0, s, 0.1);
    for (int step = 0; step < T; ++step)
      for (std::size_t i = 0; i < p0.size(); ++i)
        REQUIRE(pos[step * p0.size() + i] == Catch::Approx(p0[i]).margin(1e-6));
  }

  SECTION("unit velocity with dt 1 gives p = t") {
    Trajectory t(T, 2, 4, true);
    for (int step = 0; step < T; ++step)
      for (int n = 0; n < 2; ++n) {
        t.at(step, n, 2) = 1.f;
        t.at(step, n, 3) = 1.f;
      }
    NormStats ident{{0, 0, 0, 0}, {1, 1, 1, 1}};
    auto pos = positions_from_velocities(normalize(t, ident),
                                         std::vector<float>(4, 0.f), ident, 1.0);
    for (int step = 0; step < T; ++step)
      for (int i = 0; i < 4; ++i)
        REQUIRE(pos[step * 4 + i] == Catch::Approx(step).margin(1e-6));
  }

  SECTION("matches independent cumulative-sum oracle exactly") {
    Trajectory t = random_raw(T, N, 4, 14);
    Trajectory norm = normalize(t, s);
    std::vector<float> p0 = {0.5f, -1.f, 2.f, 0.f, 1.f, 1.f};
    const double dt = 0.1;
    auto pos = positions_from_velocities(norm, p0, s, dt);

    // independent prefix sum over denormalized velocities
    for (int n = 0; n < N; ++n)
      for (int d = 0; d < 2; ++d) {
        double acc = p0[n * 2 + d];
        for (int step = 0; step < T; ++step) {
          REQUIRE(pos[(step * N + n) * 2 + d] == static_cast<float>(acc));
          acc += (norm.at(step, n, 2 + d) * s.std[2 + d] + s.mean[2 + d]) * dt;
        }
      }
  }
}

TEST_CASE("dataset save/load round trip is lossless") {
  SimConfig cfg;
  cfg.n_particles = 3;
  cfg.n_steps = 12;
  cfg.seed = 99;
  auto ds = make_dataset(cfg, {2, 1, 1}, 8);
  REQUIRE(ds.num() == 4);

  const fs::path dir = fs::temp_directory_path() / "relpot_ds_roundtrip";
  fs::remove_all(dir);
  save_dataset(ds, dir);
  auto back = load_dataset(dir);

  REQUIRE(back.num() == ds.num());
  REQUIRE(back.kind == ds.kind);
  REQUIRE(back.seed == ds.seed);
  REQUIRE(back.dt_unit == ds.dt_unit);
  REQUIRE(back.splits.train == ds.splits.train);
  REQUIRE(back.splits.val == ds.splits.val);
  REQUIRE(back.splits.test == ds.splits.test);
  REQUIRE(back.stats.mean == ds.stats.mean);
  REQUIRE(back.stats.std == ds.stats.std);
  for (int i = 0; i < ds.num(); ++i) {
    REQUIRE(back.trajectories[i].states == ds.trajectories[i].states);
    REQUIRE(back.labels[i].values == ds.labels[i].values);
    REQUIRE(back.labels[i].kind == ds.labels[i].kind);
  }
  fs::remove_all(dir);
}

TEST_CASE("dataset load detects truncated arrays") {
  SimConfig cfg;
  cfg.n_particles = 2;
  cfg.n_steps = 6;
  auto ds = make_dataset(cfg, {1, 1, 1}, 4);
  const fs::path dir = fs::temp_directory_path() / "relpot_ds_trunc";
  fs::remove_all(dir);
  save_dataset(ds, dir);

  // chop the states file
  auto bytes = slurp(dir / "states.f32");
  std::ofstream out(dir / "states.f32", std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
  out.close();
  REQUIRE_THROWS_AS(load_dataset(dir), IoError);

  // and a mangled manifest
  std::ofstream m(dir / "manifest.json", std::ios::trunc);
  m << "{ not json";
  m.close();
  REQUIRE_THROWS_AS(load_dataset(dir), IoError);
  fs::remove_all(dir);
}

TEST_CASE("two saves of the same dataset are byte-identical") {
  SimConfig cfg;
  cfg.n_particles = 3;
  cfg.n_steps = 10;
  cfg.seed = 1234;
  auto ds = make_dataset(cfg, {2, 1, 1}, 8);

  const fs::path a = fs::temp_directory_path() / "relpot_ds_a";
  const fs::path b = fs::temp_directory_path() / "relpot_ds_b";
  fs::remove_all(a);
  fs::remove_all(b);
  save_dataset(ds, a);
  save_dataset(ds, b);
  for (const char* f : {"manifest.json", "states.f32", "labels.f32"})
    REQUIRE(slurp(a / f) == slurp(b / f));
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("edge index is canonical and stable") {
  auto e = EdgeIndex::make(4);
  REQUIRE(e.size() == 12);
  REQUIRE(e.pairs[0] == std::pair<int, int>{0, 1});
  REQUIRE(e.pairs[3] == std::pair<int, int>{1, 0});
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j) REQUIRE(e.pairs[e.index_of(i, j)] == std::pair<int, int>{i, j});
  REQUIRE_THROWS_AS(e.index_of(1, 1), ShapeError);
}

TEST_CASE("dataset validation catches bad splits") {
  SimConfig cfg;
  cfg.n_particles = 2;
  cfg.n_steps = 6;
  auto ds = make_dataset(cfg, {1, 1, 1}, 4);
  ds.splits.val = ds.splits.train;  // overlap
  REQUIRE_THROWS_AS(ds.validate(), ShapeError);
}
