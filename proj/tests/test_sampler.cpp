#include <catch2/catch_amalgamated.hpp>

#include "relpot/model/model.hpp"
#include "relpot/sample/sampler.hpp"

using namespace relpot;

namespace {

NormStats ident_stats(int D) {
  return {std::vector<float>(D, 0.f), std::vector<float>(D, 1.f)};
}

Tensor random_window(int B, int Tw, int N, int D, std::uint64_t seed) {
  Rng rng(seed);
  return Tensor::randn(B * Tw * N, D, rng);
}

}  // namespace

TEST_CASE("init_window clamps and fills uniformly") {
  const int B = 2, Tw = 6, N = 3, D = 4;
  Tensor gt = random_window(B, Tw, N, D, 1);

  Tensor a = init_window(gt, B, Tw, N, D, 2, 7);
  Tensor b = init_window(gt, B, Tw, N, D, 2, 7);
  REQUIRE(a == b);  // seed fixed -> identical

  for (int bb = 0; bb < B; ++bb)
    for (int t = 0; t < Tw; ++t)
      for (int n = 0; n < N; ++n)
        for (int d = 0; d < D; ++d) {
          const float v = a((bb * Tw + t) * N + n, d);
          if (t < 2)
            REQUIRE(v == gt((bb * Tw + t) * N + n, d));
          else {
            REQUIRE(v >= 0.f);
            REQUIRE(v < 1.f);
          }
        }

  // fully clamped window equals the ground truth
  Tensor full = init_window(gt, B, Tw, N, D, Tw, 3);
  REQUIRE(full == gt);
}

TEST_CASE("langevin matches the quadratic closed form") {
  // E = 1/2 |x - c|^2  =>  x^m = c + (1 - lambda/2)^m (x^0 - c)
  const int B = 1, Tw = 4, N = 2, D = 4;
  Rng rng(9);
  Tensor c = Tensor::randn(B * Tw * N, D, rng);
  Var cv = Var::constant(c);
  TermFn quad = [cv](const Var& x) {
    Var d = sub(x, cv);
    return mul(sum_all(mul(d, d)), Var::scalar(0.5f));
  };

  for (float lambda : {0.1f, 0.4f, 1.0f}) {
    SamplerConfig cfg;
    cfg.steps = 10;
    cfg.step_size = lambda;
    cfg.noise = 0.f;
    cfg.t_init = 0;
    Tensor x0 = random_window(B, Tw, N, D, 17);
    auto iters = langevin({quad}, x0, cfg, B, Tw, N);
    REQUIRE(iters.size() == 11);
    for (int m = 0; m <= 10; ++m) {
      const float decay = std::pow(1.f - lambda / 2.f, m);
      for (std::int64_t i = 0; i < x0.size(); ++i) {
        const float expect = c.at(i) + decay * (x0.at(i) - c.at(i));
        REQUIRE(std::fabs(iters[m].value().at(i) - expect) < 1e-5f);
      }
    }
    // for lambda < 2 the oracle energy strictly decreases step to step
    for (int m = 1; m <= 10; ++m)
      REQUIRE(quad(iters[m]).item() < quad(iters[m - 1]).item());
  }
}

TEST_CASE("langevin M=0 returns the initial state unchanged") {
  SamplerConfig cfg;
  cfg.steps = 0;
  cfg.t_init = 1;
  Tensor x0 = random_window(1, 5, 2, 4, 3);
  TermFn quad = [](const Var& x) { return sum_all(mul(x, x)); };
  auto iters = langevin({quad}, x0, cfg, 1, 5, 2);
  REQUIRE(iters.size() == 1);
  REQUIRE(iters[0].value() == x0);
}

TEST_CASE("clamped states stay bit-equal through sampling") {
  Model m = Model::create({4, 2, 8, 16, 16}, 21);
  const int B = 2, Tw = 12, N = 3;
  Tensor gt = random_window(B, Tw, N, 4, 22);
  Rng zr(23);
  Var z = Var::constant(Tensor::randn(B * 6 * 2, 8, zr));
  Var mask = mask_to_var(EdgeMask::full(6, 2), B);

  SamplerConfig cfg;
  cfg.steps = 4;
  cfg.t_init = 3;
  Tensor x0 = init_window(gt, B, Tw, N, 4, cfg.t_init, 5);
  auto iters =
      langevin({make_model_term(m.energy, z, mask, B, Tw, N)}, x0, cfg, B, Tw, N);
  for (const auto& it : iters)
    for (int b = 0; b < B; ++b)
      for (int t = 0; t < cfg.t_init; ++t)
        for (int n = 0; n < N; ++n)
          for (int d = 0; d < 4; ++d)
            REQUIRE(it.value()((b * Tw + t) * N + n, d) ==
                    gt((b * Tw + t) * N + n, d));
}

TEST_CASE("sigma=0 sampling is bit-deterministic") {
  Model m = Model::create({4, 2, 8, 16, 16}, 31);
  const int B = 1, Tw = 12, N = 3;
  Tensor gt = random_window(B, Tw, N, 4, 32);
  Rng zr(33);
  Tensor zt = Tensor::randn(6 * 2, 8, zr);

  SamplerConfig cfg;
  cfg.steps = 5;
  Tensor x0 = init_window(gt, B, Tw, N, 4, 1, 6);
  auto run = [&] {
    return langevin({make_model_term(m.energy, Var::constant(zt),
                                     mask_to_var(EdgeMask::full(6, 2)), B, Tw,
                                     N)},
                    x0, cfg, B, Tw, N);
  };
  auto a = run();
  auto b = run();
  REQUIRE(a.back().value() == b.back().value());
}

TEST_CASE("zero-strength extra potential changes nothing") {
  Model m = Model::create({4, 2, 8, 16, 16}, 41);
  const int B = 1, Tw = 12, N = 3;
  Tensor gt = random_window(B, Tw, N, 4, 42);
  Rng zr(43);
  Tensor zt = Tensor::randn(6 * 2, 8, zr);
  SamplerConfig cfg;
  cfg.steps = 3;

  PotentialContext ctx;
  ctx.stats = ident_stats(4);
  ctx.dt_unit = 0.1;
  ctx.p0 = Tensor::zeros(N, 2);
  ExtraPotential pot;
  pot.kind = ExtraPotential::Kind::goal;
  pot.strength = 0.f;

  Tensor x0 = init_window(gt, B, Tw, N, 4, 1, 6);
  auto model_term = make_model_term(m.energy, Var::constant(zt),
                                    mask_to_var(EdgeMask::full(6, 2)), B, Tw, N);
  auto with = langevin({model_term, make_extra_term(pot, B, Tw, N, 4, 1, ctx)},
                       x0, cfg, B, Tw, N);
  auto without = langevin({model_term}, x0, cfg, B, Tw, N);
  REQUIRE(with.back().value() == without.back().value());
}

TEST_CASE("velocity potential values") {
  // single particle-like check via N=2 with one zero row: 3-4-5 triangle
  Trajectory x(1, 2, 4, false);
  x.at(0, 0, 2) = 3.f;
  x.at(0, 0, 3) = 4.f;
  ExtraPotential pot;
  pot.kind = ExtraPotential::Kind::velocity;
  pot.strength = 1.f;
  pot.weight = 1.f;
  REQUIRE(velocity_potential(x, pot) == Catch::Approx(5.f).margin(1e-4));

  Trajectory zero(3, 2, 4, false);
  REQUIRE(velocity_potential(zero, pot) == Catch::Approx(0.f).margin(1e-4));
}

TEST_CASE("one langevin step with positive velocity strength slows particles") {
  const int B = 1, Tw = 8, N = 3, D = 4;
  Tensor x0 = random_window(B, Tw, N, D, 55);
  ExtraPotential pot;
  pot.kind = ExtraPotential::Kind::velocity;
  pot.strength = 4.f;
  pot.weight = 1.f / N;

  SamplerConfig cfg;
  cfg.steps = 1;
  cfg.step_size = 0.4f;
  cfg.t_init = 0;
  auto iters = langevin({make_extra_term(pot, B, Tw, N, D, 0, {})}, x0, cfg, B,
                        Tw, N);
  auto mean_speed = [&](const Tensor& x) {
    double s = 0;
    for (int r = 0; r < x.rows(); ++r)
      s += std::hypot(x(r, 2), x(r, 3));
    return s / x.rows();
  };
  REQUIRE(mean_speed(iters[1].value()) < mean_speed(x0));
}

TEST_CASE("goal potential is zero at the goal and pulls toward it") {
  const int N = 2, D = 4;
  PotentialContext ctx;
  ctx.stats = ident_stats(D);
  ctx.dt_unit = 1.0;
  ctx.p0 = Tensor::zeros(N, 2);  // already at the goal

  ExtraPotential pot;
  pot.kind = ExtraPotential::Kind::goal;
  pot.strength = 1.f;
  pot.weight = 1.f;
  pot.goal = {0.f, 0.f, 0.f};

  Trajectory still(4, N, D, false);  // zero velocities: stays at goal
  REQUIRE(goal_potential(still, pot, ctx) == Catch::Approx(0.f).margin(1e-6));

  // a single gradient step moves the accumulated position strictly toward g
  Tensor x0(1 * 3 * N, D, 0.f);
  for (int n = 0; n < N; ++n) x0(0 * N + n, 2) = 1.f;  // first-step velocity
  SamplerConfig cfg;
  cfg.steps = 1;
  cfg.step_size = 0.2f;
  cfg.t_init = 0;
  auto iters =
      langevin({make_extra_term(pot, 1, 3, N, D, 0, ctx)}, x0, cfg, 1, 3, N);
  auto sqdist = [&](const Tensor& x) {
    Trajectory t = Trajectory::from_matrix(x, 3, N, D, false);
    return goal_potential(t, pot, ctx);
  };
  REQUIRE(sqdist(iters[1].value()) < sqdist(x0));
}

TEST_CASE("avoid-area potential is zero outside and monotone in depth") {
  const int N = 2, D = 4;
  PotentialContext ctx;
  ctx.stats = ident_stats(D);
  ctx.dt_unit = 1.0;

  ExtraPotential pot;
  pot.kind = ExtraPotential::Kind::avoid_area;
  pot.strength = 1.f;
  pot.weight = 1.f;
  pot.area_min = {0.f, -1.f, 0.f};
  pot.area_max = {1.f, 1.f, 0.f};
  pot.margin = 0.1f;

  Trajectory still(1, N, D, false);

  ctx.p0 = Tensor(N, 2, std::vector<float>{-2.f, 0.f, 5.f, 3.f});  // outside
  REQUIRE(avoid_area_potential(still, pot, ctx) == 0.f);

  Tensor center(N, 2, std::vector<float>{0.5f, 0.f, -2.f, 0.f});
  Tensor edge(N, 2, std::vector<float>{0.05f, 0.f, -2.f, 0.f});
  ctx.p0 = center;
  const float at_center = avoid_area_potential(still, pot, ctx);
  ctx.p0 = edge;
  const float at_edge = avoid_area_potential(still, pot, ctx);
  REQUIRE(at_center > at_edge);
  REQUIRE(at_edge > 0.f);

  ExtraPotential bad = pot;
  bad.area_min = {2.f, 0.f, 0.f};
  bad.area_max = {1.f, 1.f, 0.f};
  ctx.p0 = center;
  REQUIRE_THROWS_AS(avoid_area_potential(still, bad, ctx), ConfigError);
}

TEST_CASE("gradient of a weighted sum of terms is the sum of weighted gradients") {
  const int B = 1, Tw = 5, N = 2, D = 4;
  Tensor x0 = random_window(B, Tw, N, D, 66);
  Rng rng(67);
  Tensor c1 = Tensor::randn(B * Tw * N, D, rng);
  Tensor c2 = Tensor::randn(B * Tw * N, D, rng);

  auto quad = [](Tensor c, float w) -> TermFn {
    return [c = std::move(c), w](const Var& x) {
      Var d = sub(x, Var::constant(c));
      return mul(sum_all(mul(d, d)), Var::scalar(w));
    };
  };

  Var x = Var::leaf(x0, true);
  Var e1 = quad(c1, 0.3f)(x);
  Var e2 = quad(c2, 1.7f)(x);
  Tensor g_joint = grad(add(e1, e2), {x})[0].value();
  Tensor g1 = grad(quad(c1, 0.3f)(x), {x})[0].value();
  Tensor g2 = grad(quad(c2, 1.7f)(x), {x})[0].value();
  for (std::int64_t i = 0; i < g_joint.size(); ++i) {
    const float sum = g1.at(i) + g2.at(i);
    REQUIRE(std::fabs(g_joint.at(i) - sum) <=
            1e-4f * std::max(1.f, std::fabs(sum)));
  }
}

TEST_CASE("compose_models with one full-mask model equals plain langevin") {
  Model m = Model::create({4, 2, 8, 16, 16}, 71);
  const int B = 1, Tw = 12, N = 3;
  Tensor gt = random_window(B, Tw, N, 4, 72);
  LatentSet z;
  z.edges = EdgeIndex::make(N);
  z.n_latent = 2;
  z.dim = 8;
  Rng zr(73);
  z.z = Tensor::randn(12, 8, zr);

  SamplerConfig cfg;
  cfg.steps = 3;
  Tensor x0 = init_window(gt, B, Tw, N, 4, 1, 7);

  ModelTerm term{&m.energy, z, EdgeMask::full(6, 2), 1.f};
  auto composed = compose_models({term}, x0, cfg, B, Tw, N);
  auto plain = langevin({make_model_term(m.energy, latents_to_var(z),
                                         mask_to_var(EdgeMask::full(6, 2)), B,
                                         Tw, N)},
                        x0, cfg, B, Tw, N);
  REQUIRE(composed.back().value() == plain.back().value());

  // two identical models with complementary masks: finite, deterministic
  ModelTerm a{&m.energy, z, EdgeMask::full(6, 2), 1.f};
  a.mask.at(0, 0) = a.mask.at(1, 1) = 0.f;
  ModelTerm b{&m.energy, z, a.mask.complement(), 1.f};
  auto joint = compose_models({a, b}, x0, cfg, B, Tw, N);
  REQUIRE(joint.back().value().all_finite());
  auto joint2 = compose_models({a, b}, x0, cfg, B, Tw, N);
  REQUIRE(joint.back().value() == joint2.back().value());
}
