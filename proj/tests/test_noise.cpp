#include "isomp/noise.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

using namespace isomp;

TEST_CASE("truncate clips to [-A, A]") {
  CHECK(truncate(0.0, 2.0) == 0.0);
  CHECK(truncate(10.0, 2.0) == 2.0);
  CHECK(truncate(-10.0, 2.0) == -2.0);
  CHECK(truncate(1.5, 2.0) == 1.5);
}

TEST_CASE("truncation threshold") {
  CHECK(truncation_threshold(std::ldexp(1.0, -8), 2) == doctest::Approx(4.70964).epsilon(1e-5));
  CHECK(truncation_threshold(std::ldexp(1.0, -8), 2) ==
        doctest::Approx(std::sqrt(4.0 * 8.0 * std::log(2.0))).epsilon(1e-15));
  NoiseConfig cfg{3, 0.01, 1, 0};
  CHECK(cfg.threshold() == doctest::Approx(std::sqrt(2.0 * std::log(100.0))));
  CHECK_THROWS_AS(truncation_threshold(0.0, 2), std::invalid_argument);
  CHECK_THROWS_AS((NoiseConfig{1, 1.0, 2, 0}.validate()), std::invalid_argument);
  CHECK_THROWS_AS((NoiseConfig{1, 0.1, 0, 0}.validate()), std::invalid_argument);
}

TEST_CASE("blocks are deterministic and truncated") {
  NoiseConfig cfg{5, std::ldexp(1.0, -3), 1, 42};
  const CounterRng rng = path_stream(cfg.seed, 7);
  const double A = cfg.threshold();
  for (long s = 0; s < 2000; ++s) {
    const IncrementBlock b = sample_block(rng, cfg, s);
    REQUIRE(b.xi.size() == 5);
    CHECK(b.step_index == s);
    for (std::size_t k = 0; k < b.xi.size(); ++k) {
      CHECK(std::abs(b.zeta[k]) <= A);
      if (std::abs(b.xi[k]) <= A) CHECK(b.zeta[k] == b.xi[k]);
    }
  }
  // Any evaluation order gives the same block.
  const IncrementBlock late = sample_block(path_stream(42, 7), cfg, 1999);
  const IncrementBlock again = sample_block(rng, cfg, 1999);
  CHECK(late.xi == again.xi);
  CHECK(sample_block(path_stream(42, 8), cfg, 3).xi != sample_block(rng, cfg, 3).xi);
  CHECK(sample_block(path_stream(43, 7), cfg, 3).xi != sample_block(rng, cfg, 3).xi);

  NoiseConfig none{0, 0.01, 2, 1};
  CHECK(sample_block(rng, none, 0).xi.empty());
  CHECK_THROWS(sample_block(rng, cfg, -1));
}

TEST_CASE("initial-condition stream is separate from path streams") {
  const CounterRng ic = initial_condition_stream(5);
  for (std::uint64_t p = 0; p < 100; ++p) CHECK(ic.bits(0) != path_stream(5, p).bits(0));
}

TEST_CASE("uniforms lie in the open unit interval") {
  const CounterRng rng(0);
  for (std::uint64_t c = 0; c < 10000; ++c) {
    const double u = rng.uniform(c);
    CHECK(u > 0.0);
    CHECK(u < 1.0);
  }
}

TEST_CASE("normal moments") {
  const CounterRng rng = path_stream(11, 0);
  const int n = 1000000;
  NoiseConfig cfg{1, std::ldexp(1.0, -4), 2, 11};
  double s = 0.0, s2 = 0.0, zs = 0.0, zs2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double x = rng.normal(static_cast<std::uint64_t>(i));
    s += x;
    s2 += x * x;
    const double z = truncate(x, cfg.threshold());
    zs += z;
    zs2 += z * z;
  }
  const double mean = s / n;
  const double var = s2 / n - mean * mean;
  CHECK(std::abs(mean) < 4.0 / std::sqrt(n));
  CHECK(std::abs(var - 1.0) < 4.0 * std::sqrt(2.0 / n));
  const double zmean = zs / n;
  const double zsd = std::sqrt(zs2 / n - zmean * zmean);
  CHECK(std::abs(zmean) < 4.0 * zsd / std::sqrt(n));
}

TEST_CASE("tail mass beyond the threshold is small") {
  const double A = truncation_threshold(std::ldexp(1.0, -7), 2);
  const CounterRng rng = path_stream(3, 1);
  int beyond = 0;
  const int n = 1000000;
  for (int i = 0; i < n; ++i) beyond += std::abs(rng.normal(static_cast<std::uint64_t>(i))) > A;
  CHECK(static_cast<double>(beyond) / n < 1e-4);
}

TEST_CASE("path aggregation") {
  const CounterRng rng = path_stream(9, 2);
  const NormalPath fine = sample_path(rng, 3, 64);
  CHECK(fine.steps == 64);
  CHECK(aggregate_path(fine, 1).xi == fine.xi);

  NormalPath ones{2, 8, std::vector<double>(16, 1.0)};
  const NormalPath c = aggregate_path(ones, 4);
  CHECK(c.steps == 2);
  for (double x : c.xi) CHECK(x == doctest::Approx(2.0));

  const NormalPath a = aggregate_path(aggregate_path(fine, 2), 4);
  const NormalPath b = aggregate_path(fine, 8);
  REQUIRE(a.xi.size() == b.xi.size());
  for (std::size_t i = 0; i < a.xi.size(); ++i) CHECK(std::abs(a.xi[i] - b.xi[i]) < 1e-14);

  // Channels aggregate independently: channel k of coarse step j sums channel k only.
  const NormalPath c4 = aggregate_path(fine, 4);
  for (int k = 0; k < 3; ++k) {
    double sum = 0.0;
    for (long s = 4; s < 8; ++s) sum += fine.at(s)[k];
    CHECK(c4.at(1)[k] == doctest::Approx(sum / 2.0).epsilon(1e-14));
  }

  CHECK_THROWS_AS(aggregate_path(fine, 3), std::invalid_argument);
  CHECK_THROWS_AS(aggregate_path(sample_path(rng, 1, 6), 4), std::invalid_argument);
  CHECK_THROWS_AS(aggregate_path(fine, 0), std::invalid_argument);
}

TEST_CASE("aggregated normals have unit variance") {
  const int paths = 100000;
  double s = 0.0, s2 = 0.0;
  for (int p = 0; p < paths; ++p) {
    const NormalPath fine = sample_path(path_stream(77, static_cast<std::uint64_t>(p)), 1, 8);
    const double x = aggregate_path(fine, 8).xi[0];
    s += x;
    s2 += x * x;
  }
  const double mean = s / paths;
  const double var = s2 / paths - mean * mean;
  CHECK(std::abs(var - 1.0) < 3.0 * std::sqrt(2.0 / paths));
}

TEST_CASE("make_block truncates given normals") {
  const std::vector<double> xi{-5.0, 0.5, 5.0};
  const IncrementBlock b = make_block(xi, 2.0, 4);
  CHECK(b.zeta == std::vector<double>{-2.0, 0.5, 2.0});
  CHECK(b.xi == xi);
  CHECK(b.step_index == 4);
}
