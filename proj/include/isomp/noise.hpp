#pragma once

// Truncated Gaussian increments for implicit stochastic midpoint steps, counter-based
// per-path random streams, and fine-to-coarse aggregation of Brownian paths.

#include <cstdint>
#include <span>
#include <vector>

namespace isomp {

/// Recorded in run metadata so that ensembles can be reproduced exactly.
inline constexpr const char* kSamplingMethod =
    "splitmix64 counter stream; inverse-CDF normals (boost erfc_inv)";

struct NoiseConfig {
  int channels = 0;
  double h = 0.0;
  int truncation_level = 2;
  std::uint64_t seed = 0;

  /// A_h = sqrt(2 l |log h|)
  double threshold() const;
  void validate() const;
};

double truncation_threshold(double h, int truncation_level);

/// Clips xi to [-A, A].
double truncate(double xi, double A);

/// Stateless random stream: the value at a counter is a pure function of
/// (key, counter), so draws can be generated in any order or in parallel.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : key_(key) {}

  std::uint64_t key() const { return key_; }
  std::uint64_t bits(std::uint64_t counter) const;
  /// Uniform on the open interval (0, 1).
  double uniform(std::uint64_t counter) const;
  double normal(std::uint64_t counter) const;

 private:
  std::uint64_t key_;
};

/// Stream of path `path_index` in an ensemble seeded by `seed`.
CounterRng path_stream(std::uint64_t seed, std::uint64_t path_index);

/// Stream for seeded initial conditions, disjoint from every path stream.
CounterRng initial_condition_stream(std::uint64_t seed);

struct IncrementBlock {
  std::vector<double> xi;
  std::vector<double> zeta;
  long step_index = 0;
};

/// Standard normal draws xi_k for step `step` and their truncations at A_h.
IncrementBlock sample_block(const CounterRng& rng, const NoiseConfig& cfg, long step);

/// Block from given normals, truncated at A.
IncrementBlock make_block(std::span<const double> xi, double A, long step);

/// Standard normals on a uniform grid: xi(step, channel), row-major by step.
struct NormalPath {
  int channels = 0;
  long steps = 0;
  std::vector<double> xi;

  std::span<const double> at(long step) const {
    return {xi.data() + step * channels, static_cast<std::size_t>(channels)};
  }
};

NormalPath sample_path(const CounterRng& rng, int channels, long steps);

/// Coarse xi_j = sum_{i = jr}^{(j+1)r - 1} xi_i / sqrt(r), channelwise. The
/// underlying Brownian path is shared; truncation happens afterwards at the
/// coarse step's threshold.
NormalPath aggregate_path(const NormalPath& fine, long ratio);

}  // namespace isomp
