#include "doctest.h"

#include <cmath>
#include <limits>

#include "pic/core.hpp"
#include "test_scorers.hpp"

using namespace pic;
using pictest::ensemble_of;
using pictest::Vec;

namespace {

const Condition kNoCond = ClassLabel{0};

Vec vec2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

}  // namespace

TEST_CASE("compose_energies: weighted sum in list order") {
  const auto q1 = std::make_shared<pictest::ConstantScorer>("c1", 2.5);
  const auto q2 = std::make_shared<pictest::ConstantScorer>("c2", -1.25);

  SUBCASE("all weights zero gives exactly zero") {
    const auto ens = ensemble_of({{q1, 0.0}, {q2, 0.0}});
    CHECK(compose_energies(vec2(1, 2), ens, kNoCond) == 0.0);
  }
  SUBCASE("single unit-weight scorer is the identity") {
    const auto ens = ensemble_of({{q1, 1.0}});
    CHECK(compose_energies(vec2(0, 0), ens, kNoCond) == 2.5);
  }
  SUBCASE("two scorers match the naive loop oracle") {
    const double w1 = 0.7, w2 = 2.25;
    const auto ens = ensemble_of({{q1, w1}, {q2, w2}});
    const Vec x = vec2(3, -4);
    // Naive oracle: evaluate each scorer independently and accumulate.
    double expected = 0.0;
    expected += w1 * q1->energy(x, kNoCond);
    expected += w2 * q2->energy(x, kNoCond);
    CHECK(compose_energies(x, ens, kNoCond) == expected);
  }
}

TEST_CASE("compose_energies: typed errors") {
  SUBCASE("non-finite energy names the scorer") {
    const auto bad =
        std::make_shared<pictest::ConstantScorer>("nanny", std::numeric_limits<double>::quiet_NaN());
    const auto ens = ensemble_of({{bad, 1.0}});
    CHECK_THROWS_WITH_AS(compose_energies(vec2(0, 0), ens, kNoCond),
                         doctest::Contains("nanny"), NonFiniteEnergyError);
  }
  SUBCASE("empty ensemble rejected") {
    CHECK_THROWS_AS(EnsembleSpec<Vec>({}), ConfigError);
  }
  SUBCASE("duplicate names rejected") {
    const auto a = std::make_shared<pictest::ConstantScorer>("dup", 1.0);
    const auto b = std::make_shared<pictest::ConstantScorer>("dup", 2.0);
    CHECK_THROWS_AS(ensemble_of({{a, 1.0}, {b, 1.0}}), ConfigError);
  }
  SUBCASE("negative weight rejected") {
    const auto a = std::make_shared<pictest::ConstantScorer>("w", 1.0);
    CHECK_THROWS_AS(ensemble_of({{a, -0.5}}), ConfigError);
  }
}

TEST_CASE("compose_gradients: analytic cases") {
  SUBCASE("quadratic |x|^2/2 at (1,0) has gradient (1,0)") {
    const auto q = std::make_shared<pictest::QuadraticScorer>("q", vec2(0, 0));
    const auto ens = ensemble_of({{q, 1.0}});
    const Vec g = compose_gradients(vec2(1, 0), ens, kNoCond);
    CHECK(g[0] == doctest::Approx(1.0));
    CHECK(g[1] == doctest::Approx(0.0));
  }
  SUBCASE("two identical unit-weight scorers double the gradient") {
    const auto a = std::make_shared<pictest::QuadraticScorer>("a", vec2(1, -2));
    const auto b = std::make_shared<pictest::QuadraticScorer>("b", vec2(1, -2));
    const Vec x = vec2(0.3, 0.9);
    const Vec g1 = compose_gradients(x, ensemble_of({{a, 1.0}}), kNoCond);
    const Vec g2 = compose_gradients(x, ensemble_of({{a, 1.0}, {b, 1.0}}), kNoCond);
    CHECK((g2 - 2.0 * g1).norm() == 0.0);
  }
  SUBCASE("energy-only scorer triggers a capability error") {
    const auto a = std::make_shared<pictest::QuadraticScorer>("a", vec2(0, 0));
    const auto e = std::make_shared<pictest::EnergyOnlyScorer>("plain");
    const auto ens = ensemble_of({{a, 1.0}, {e, 1.0}});
    CHECK_THROWS_AS(compose_gradients(vec2(1, 1), ens, kNoCond), CapabilityError);
  }
}

TEST_CASE("compose_gradients matches finite differences on randomized ensembles") {
  Rng rng(20240817);
  for (int rep = 0; rep < 40; ++rep) {
    const int dim = 2 + static_cast<int>(rng.below(3));
    std::vector<std::pair<std::shared_ptr<const Scorer<Vec>>, double>> scorers;
    const int n_scorers = 1 + static_cast<int>(rng.below(3));
    for (int s = 0; s < n_scorers; ++s) {
      if (rng.uniform() < 0.5) {
        Eigen::MatrixXd b(dim, dim);
        for (int i = 0; i < dim; ++i)
          for (int j = 0; j < dim; ++j) b(i, j) = rng.normal();
        Eigen::MatrixXd spd =
            b * b.transpose() + 0.5 * Eigen::MatrixXd::Identity(dim, dim);
        scorers.push_back({std::make_shared<pictest::QuadraticScorer>(
                               "q" + std::to_string(s), rng.normal_vector(dim), spd),
                           rng.uniform() * 2.0});
      } else {
        std::vector<double> amps{rng.normal(), rng.normal()};
        std::vector<Vec> freqs{rng.normal_vector(dim), rng.normal_vector(dim)};
        scorers.push_back({std::make_shared<pictest::SinusoidScorer>(
                               "s" + std::to_string(s), std::move(amps), std::move(freqs)),
                           rng.uniform() * 2.0});
      }
    }
    const auto ens = ensemble_of(std::move(scorers));
    const Vec x = rng.normal_vector(dim);
    const Vec g = compose_gradients(x, ens, kNoCond);
    const Vec fd = pictest::fd_gradient(x, ens, kNoCond);
    const double scale = std::max(1.0, std::max(g.norm(), fd.norm()));
    CHECK((g - fd).norm() / scale < 1e-5);
  }
}

TEST_CASE("core invariants") {
  Rng rng(7);
  const auto a = std::make_shared<pictest::QuadraticScorer>("a", vec2(1, 1));
  const auto b = std::make_shared<pictest::QuadraticScorer>("b", vec2(-2, 0.5));
  const auto c = std::make_shared<pictest::SinusoidScorer>(
      "c", std::vector<double>{1.0}, std::vector<Vec>{vec2(0.7, -1.3)});

  SUBCASE("linearity over concatenated ensembles") {
    for (int rep = 0; rep < 20; ++rep) {
      const Vec x = rng.normal_vector(2);
      const auto part1 = ensemble_of({{a, 0.5}, {b, 1.5}});
      const auto part2 = ensemble_of({{c, 2.0}});
      const auto whole = ensemble_of({{a, 0.5}, {b, 1.5}, {c, 2.0}});
      const double sum = compose_energies(x, part1, kNoCond) + compose_energies(x, part2, kNoCond);
      CHECK(compose_energies(x, whole, kNoCond) == sum);
    }
  }
  SUBCASE("argmin over a candidate set is invariant to a common positive weight scale") {
    for (double scale : {0.1, 2.0, 37.5}) {
      const auto base = ensemble_of({{a, 1.0}, {b, 2.0}, {c, 0.7}});
      const auto scaled = ensemble_of({{a, scale}, {b, 2.0 * scale}, {c, 0.7 * scale}});
      std::vector<Vec> candidates;
      for (int i = 0; i < 12; ++i) candidates.push_back(rng.normal_vector(2) * 2.0);
      int argmin_base = 0, argmin_scaled = 0;
      double best_base = std::numeric_limits<double>::infinity();
      double best_scaled = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double eb = compose_energies(candidates[i], base, kNoCond);
        const double es = compose_energies(candidates[i], scaled, kNoCond);
        if (eb < best_base) {
          best_base = eb;
          argmin_base = static_cast<int>(i);
        }
        if (es < best_scaled) {
          best_scaled = es;
          argmin_scaled = static_cast<int>(i);
        }
      }
      CHECK(argmin_base == argmin_scaled);
    }
  }
  SUBCASE("zero-weight scorers change nothing") {
    const Vec x = vec2(0.25, -3);
    const auto with = ensemble_of({{a, 1.0}, {b, 0.0}});
    const auto without = ensemble_of({{a, 1.0}});
    CHECK(compose_energies(x, with, kNoCond) == compose_energies(x, without, kNoCond));
    CHECK((compose_gradients(x, with, kNoCond) - compose_gradients(x, without, kNoCond)).norm() ==
          0.0);
  }
}

TEST_CASE("run_consensus") {
  const auto quad = std::make_shared<pictest::QuadraticScorer>("quad", vec2(2, -1));
  const auto ens = ensemble_of({{quad, 1.0}});

  Generator<Vec> gen;
  gen.propose = [](Rng& rng) { return rng.normal_vector(2) * 3.0; };

  SUBCASE("gradient refinement on a convex quadratic is non-increasing") {
    RefinementConfig cfg;
    cfg.step_size = 0.1;
    cfg.iterations = 50;
    cfg.seed = 42;
    gen.refine = [&](const Vec& x, int, Rng&) {
      return Vec(x - cfg.step_size * compose_gradients(x, ens, kNoCond));
    };
    const auto result = run_consensus(gen, ens, kNoCond, cfg);
    REQUIRE(result.iterations_run == 50);
    REQUIRE(result.energy_trajectory.size() == 50);
    REQUIRE(result.per_scorer_trajectory.size() == 50);
    for (const auto& row : result.per_scorer_trajectory) CHECK(row.size() == 1);
    for (std::size_t k = 1; k < result.energy_trajectory.size(); ++k) {
      CHECK(result.energy_trajectory[k] <= result.energy_trajectory[k - 1] + 1e-12);
    }
  }

  SUBCASE("a very large early-stop tolerance stops after one iteration") {
    RefinementConfig cfg;
    cfg.step_size = 0.1;
    cfg.iterations = 50;
    cfg.seed = 42;
    cfg.early_stop_tolerance = 1e100;
    gen.refine = [&](const Vec& x, int, Rng&) {
      return Vec(x - cfg.step_size * compose_gradients(x, ens, kNoCond));
    };
    const auto result = run_consensus(gen, ens, kNoCond, cfg);
    CHECK(result.iterations_run == 1);
    CHECK(result.energy_trajectory.size() == 1);
  }

  SUBCASE("same seed, same inputs: bit-identical results") {
    RefinementConfig cfg;
    cfg.step_size = 0.05;
    cfg.iterations = 20;
    cfg.seed = 99;
    gen.refine = [&](const Vec& x, int, Rng& rng) {
      return Vec(x - cfg.step_size * compose_gradients(x, ens, kNoCond) +
                 0.01 * rng.normal_vector(2));
    };
    const auto r1 = run_consensus(gen, ens, kNoCond, cfg);
    const auto r2 = run_consensus(gen, ens, kNoCond, cfg);
    CHECK(r1.final_proposal == r2.final_proposal);
    CHECK(r1.energy_trajectory == r2.energy_trajectory);
    CHECK(r1.per_scorer_trajectory == r2.per_scorer_trajectory);
    CHECK(r1.iterations_run == r2.iterations_run);
  }

  SUBCASE("zero iterations rejected at config validation") {
    RefinementConfig cfg;
    cfg.iterations = 0;
    gen.refine = [](const Vec& x, int, Rng&) { return x; };
    CHECK_THROWS_AS(run_consensus(gen, ens, kNoCond, cfg), ConfigError);
  }
}
