#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <json.hpp>

#include "ecstore/errors.hpp"
#include "ecstore/model.hpp"
#include "helpers.hpp"

using namespace ecstore;
using ectest::integrate;

TEST_CASE("exponential moments are n!/mu^n") {
  const auto m = moments_from_distribution(ServiceDist::exponential(1.0));
  CHECK(m.mean == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.variance == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.m2 == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(m.m3 == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("deterministic moments are powers of the point mass") {
  const auto m = moments_from_distribution(ServiceDist::deterministic(2.0));
  CHECK(m.mean == 2.0);
  CHECK(m.variance == 0.0);
  CHECK(m.m2 == 4.0);
  CHECK(m.m3 == 8.0);
}

TEST_CASE("shifted exponential moments match quadrature") {
  const auto m = moments_from_distribution(ServiceDist::shifted_exponential(1.0, 1.0));
  CHECK(m.mean == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(m.variance == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.m2 == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(m.m3 == doctest::Approx(16.0).epsilon(1e-12));

  // independent oracle: integrate x^n exp(-(x-1)) over [1, 1+60]
  auto raw = [&](int n) {
    return integrate([&](double x) { return std::pow(x, n) * std::exp(-(x - 1.0)); }, 1.0, 61.0,
                     60000);
  };
  CHECK(m.mean == doctest::Approx(raw(1)).epsilon(1e-8));
  CHECK(m.m2 == doctest::Approx(raw(2)).epsilon(1e-8));
  CHECK(m.m3 == doctest::Approx(raw(3)).epsilon(1e-8));
}

TEST_CASE("lognormal moments match quadrature") {
  const double lm = 0.3, ls = 0.5;
  const auto m = moments_from_distribution(ServiceDist::lognormal(lm, ls));
  auto raw = [&](int n) {
    // integrate in log space against the normal density
    return integrate(
        [&](double t) {
          return std::exp(double(n) * t) * std::exp(-(t - lm) * (t - lm) / (2 * ls * ls)) /
                 (ls * std::sqrt(2 * M_PI));
        },
        lm - 12 * ls, lm + 12 * ls, 40000);
  };
  CHECK(m.mean == doctest::Approx(raw(1)).epsilon(1e-9));
  CHECK(m.m2 == doctest::Approx(raw(2)).epsilon(1e-9));
  CHECK(m.m3 == doctest::Approx(raw(3)).epsilon(1e-9));
  CHECK(m.variance == doctest::Approx(m.m2 - m.mean * m.mean).epsilon(1e-12));
}

TEST_CASE("sample moments: direct arithmetic cases") {
  SUBCASE("constant samples") {
    const double xs[] = {5, 5, 5};
    const auto m = moments_from_samples(xs);
    CHECK(m.mean == 5.0);
    CHECK(m.variance == 0.0);
    CHECK(m.m2 == 25.0);
    CHECK(m.m3 == 125.0);
  }
  SUBCASE("1,2,3") {
    const double xs[] = {1, 2, 3};
    const auto m = moments_from_samples(xs);
    CHECK(m.mean == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(m.variance == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(m.m2 == doctest::Approx(14.0 / 3.0).epsilon(1e-12));
    CHECK(m.m3 == doctest::Approx(12.0).epsilon(1e-12));  // (1 + 8 + 27)/3
  }
  SUBCASE("mean 13.9, std 4.3 gives m2 near 211.7") {
    const double xs[] = {13.9 - 4.3, 13.9 + 4.3};
    const auto m = moments_from_samples(xs);
    CHECK(m.mean == doctest::Approx(13.9).epsilon(1e-12));
    CHECK(std::sqrt(m.variance) == doctest::Approx(4.3).epsilon(1e-12));
    CHECK(std::abs(m.m2 - 211.7) < 1e-9);
  }
}

TEST_CASE("sample moments reject bad input") {
  CHECK_THROWS_AS(moments_from_samples(std::vector<double>{}), ValidationError);
  CHECK_THROWS_AS(moments_from_samples(std::vector<double>{1.0}), ValidationError);
  CHECK_THROWS_AS(moments_from_samples(std::vector<double>{1.0, -2.0}), ValidationError);
  CHECK_THROWS_AS(moments_from_samples(std::vector<double>{1.0, 0.0}), ValidationError);
}

TEST_CASE("distribution families reject out-of-domain parameters") {
  CHECK_THROWS_AS(moments_from_distribution(ServiceDist::exponential(0.0)), ValidationError);
  CHECK_THROWS_AS(moments_from_distribution(ServiceDist::deterministic(-1.0)), ValidationError);
  CHECK_THROWS_AS(moments_from_distribution(ServiceDist::shifted_exponential(-0.1, 1.0)),
                  ValidationError);
  CHECK_THROWS_AS(moments_from_distribution(ServiceDist::lognormal(0.0, -0.5)), ValidationError);
}

TEST_CASE("sampled moments converge to analytic moments within 3 standard errors") {
  const ServiceDist dists[] = {
      ServiceDist::exponential(1.3),
      ServiceDist::deterministic(2.0),
      ServiceDist::shifted_exponential(0.5, 2.0),
      ServiceDist::lognormal(0.2, 0.5),
      ServiceDist::empirical({1.0, 2.0, 2.5, 4.0}),
  };
  const int n = 1000000;
  int family = 0;
  for (const auto& dist : dists) {
    Rng rng(9001 + family++);
    std::vector<double> xs(n);
    for (auto& x : xs) x = dist.sample(rng);
    const auto expect = moments_from_distribution(dist);
    const auto got = moments_from_samples(xs);

    // standard errors of the raw moment estimators, from the samples themselves
    auto se_of = [&](int p, double mean_p) {
      double ss = 0;
      for (double x : xs) {
        const double v = std::pow(x, p) - mean_p;
        ss += v * v;
      }
      return std::sqrt(ss / double(n)) / std::sqrt(double(n));
    };
    CHECK(std::abs(got.mean - expect.mean) <= 3 * se_of(1, got.mean) + 1e-12);
    CHECK(std::abs(got.m2 - expect.m2) <= 3 * se_of(2, got.m2) + 1e-12);
    CHECK(std::abs(got.m3 - expect.m3) <= 3 * se_of(3, got.m3) + 1e-12);
  }
}

TEST_CASE("scenario config parsing and validation") {
  const std::string good = R"({
    "nodes": [
      {"id": 1, "cost": 1.0, "service": {"dist": "exponential", "rate": 1.0}},
      {"id": 2, "cost": 0.5, "service": {"moments": {"mean": 2.0, "variance": 1.0, "m3": 16.0}}}
    ],
    "files": [
      {"id": 1, "k": 2, "lambda": 0.1},
      {"id": 2, "k": 1, "lambda": 0.05, "d": 2, "size_mb": 150}
    ],
    "optimizer": {"theta": 2.0, "beta": 500, "epsilon": 0.005},
    "simulator": {"horizon_sec": 5000, "warmup_sec": 500, "replications": 2, "seed": 7}
  })";

  SUBCASE("happy path") {
    const Scenario sc = load_scenario(good);
    CHECK(sc.node_count() == 2);
    CHECK(sc.file_count() == 2);
    CHECK(sc.nodes[1].mu == doctest::Approx(0.5));
    CHECK(sc.nodes[1].gamma2 == doctest::Approx(5.0));
    CHECK_FALSE(sc.nodes[1].service_dist.has_value());
    CHECK(sc.optimizer.beta == 500);
    CHECK(sc.simulator.seed == 7);
    CHECK(sc.files[1].d == 2);
  }

  SUBCASE("validation is idempotent") {
    const Scenario sc = load_scenario(good);
    const std::string round = scenario_to_json(sc);
    const Scenario sc2 = load_scenario(round);
    CHECK(scenario_to_json(sc2) == round);
  }

  SUBCASE("k exceeding node count is rejected") {
    const std::string bad = R"({
      "nodes": [{"id": 1, "cost": 0, "service": {"dist": "exponential", "rate": 1}},
                {"id": 2, "cost": 0, "service": {"dist": "exponential", "rate": 1}}],
      "files": [{"id": 1, "k": 3, "lambda": 0.1}]
    })";
    CHECK_THROWS_WITH_AS(load_scenario(bad), "file 1: k exceeds node count", ValidationError);
  }

  SUBCASE("missing fields and bad values are rejected") {
    CHECK_THROWS_AS(load_scenario("{"), ValidationError);
    CHECK_THROWS_AS(load_scenario(R"({"nodes": [], "files": []})"), ValidationError);
    CHECK_THROWS_AS(
        load_scenario(
            R"({"nodes": [{"id": 1, "cost": 0, "service": {"dist": "exponential", "rate": 1}}],
                "files": [{"id": 1, "k": 1, "lambda": 0}]})"),
        ValidationError);
    CHECK_THROWS_AS(
        load_scenario(
            R"({"nodes": [{"id": 1, "cost": 0, "service": {"dist": "exponential"}}],
                "files": [{"id": 1, "k": 1, "lambda": 1}]})"),
        ValidationError);
  }

  SUBCASE("inconsistent supplied m2 is rejected") {
    const std::string bad = R"({
      "nodes": [{"id": 1, "cost": 0,
                 "service": {"moments": {"mean": 2.0, "variance": 1.0, "m2": 4.0, "m3": 16.0}}}],
      "files": [{"id": 1, "k": 1, "lambda": 0.1}]
    })";
    CHECK_THROWS_AS(load_scenario(bad), ValidationError);
  }

  SUBCASE("duplicate ids are rejected") {
    const std::string bad = R"({
      "nodes": [{"id": 1, "cost": 0, "service": {"dist": "exponential", "rate": 1}},
                {"id": 1, "cost": 0, "service": {"dist": "exponential", "rate": 1}}],
      "files": [{"id": 1, "k": 1, "lambda": 0.1}]
    })";
    CHECK_THROWS_AS(load_scenario(bad), ValidationError);
  }

  SUBCASE("jensen violation in supplied moments is rejected") {
    const std::string bad = R"({
      "nodes": [{"id": 1, "cost": 0,
                 "service": {"moments": {"mean": 2.0, "variance": 1.0, "m3": 9.0}}}],
      "files": [{"id": 1, "k": 1, "lambda": 0.1}]
    })";
    CHECK_THROWS_AS(load_scenario(bad), ValidationError);  // m3 < m2 * mean = 10
  }
}

TEST_CASE("testbed-scale scenario validates") {
  const Scenario sc = ectest::testbed_scenario();
  CHECK(sc.node_count() == 12);
  CHECK(sc.file_count() == 1000);
  CHECK(sc.total_arrival_rate() == doctest::Approx(0.118).epsilon(1e-9));
  // round-trips through the config format
  const Scenario sc2 = load_scenario(scenario_to_json(sc));
  CHECK(scenario_to_json(sc2) == scenario_to_json(sc));
}
