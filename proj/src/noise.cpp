#include "isomp/noise.hpp"

#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <stdexcept>

namespace isomp {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kPathTag = 0xd1b54a32d192ed03ULL;
constexpr std::uint64_t kInitTag = 0x8cb92ba72f3d8dd7ULL;

constexpr std::uint64_t splitmix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

bool is_power_of_two(long r) { return r > 0 && (r & (r - 1)) == 0; }

}  // namespace

double truncation_threshold(double h, int truncation_level) {
  if (!(h > 0.0)) throw std::invalid_argument("truncation threshold: h must be positive");
  if (truncation_level < 1) throw std::invalid_argument("truncation level must be >= 1");
  return std::sqrt(2.0 * truncation_level * std::abs(std::log(h)));
}

double NoiseConfig::threshold() const { return truncation_threshold(h, truncation_level); }

void NoiseConfig::validate() const {
  if (channels < 0) throw std::invalid_argument("NoiseConfig: negative channel count");
  if (!(h > 0.0)) throw std::invalid_argument("NoiseConfig: h must be positive");
  if (truncation_level < 1) throw std::invalid_argument("NoiseConfig: truncation level must be >= 1");
  if (channels > 0 && !(threshold() > 0.0)) {
    throw std::invalid_argument("NoiseConfig: truncation threshold vanishes at h = 1");
  }
}

double truncate(double xi, double A) {
  if (xi > A) return A;
  if (xi < -A) return -A;
  return xi;
}

std::uint64_t CounterRng::bits(std::uint64_t counter) const {
  return splitmix(key_ + (counter + 1) * kGolden);
}

double CounterRng::uniform(std::uint64_t counter) const {
  return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::normal(std::uint64_t counter) const {
  return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * uniform(counter));
}

CounterRng path_stream(std::uint64_t seed, std::uint64_t path_index) {
  return CounterRng(splitmix(splitmix(seed ^ kPathTag) + path_index * kGolden));
}

CounterRng initial_condition_stream(std::uint64_t seed) {
  return CounterRng(splitmix(splitmix(seed ^ kInitTag)));
}

IncrementBlock make_block(std::span<const double> xi, double A, long step) {
  IncrementBlock b;
  b.step_index = step;
  b.xi.assign(xi.begin(), xi.end());
  b.zeta.resize(b.xi.size());
  for (std::size_t k = 0; k < b.xi.size(); ++k) b.zeta[k] = truncate(b.xi[k], A);
  return b;
}

IncrementBlock sample_block(const CounterRng& rng, const NoiseConfig& cfg, long step) {
  if (step < 0) throw std::invalid_argument("sample_block: negative step index");
  IncrementBlock b;
  b.step_index = step;
  if (cfg.channels == 0) return b;
  const double A = cfg.threshold();
  b.xi.resize(static_cast<std::size_t>(cfg.channels));
  b.zeta.resize(b.xi.size());
  const auto base = static_cast<std::uint64_t>(step) * static_cast<std::uint64_t>(cfg.channels);
  for (int k = 0; k < cfg.channels; ++k) {
    b.xi[k] = rng.normal(base + static_cast<std::uint64_t>(k));
    b.zeta[k] = truncate(b.xi[k], A);
  }
  return b;
}

NormalPath sample_path(const CounterRng& rng, int channels, long steps) {
  if (channels < 0 || steps < 0) throw std::invalid_argument("sample_path: negative size");
  NormalPath p;
  p.channels = channels;
  p.steps = steps;
  const auto total = static_cast<std::uint64_t>(steps) * static_cast<std::uint64_t>(channels);
  p.xi.resize(total);
  for (std::uint64_t c = 0; c < total; ++c) p.xi[c] = rng.normal(c);
  return p;
}

NormalPath aggregate_path(const NormalPath& fine, long ratio) {
  if (!is_power_of_two(ratio)) {
    throw std::invalid_argument("aggregate_path: ratio must be a positive power of two");
  }
  if (fine.steps % ratio != 0) {
    throw std::invalid_argument("aggregate_path: fine length not divisible by ratio");
  }
  NormalPath coarse;
  coarse.channels = fine.channels;
  coarse.steps = fine.steps / ratio;
  if (ratio == 1) {
    coarse.xi = fine.xi;
    return coarse;
  }
  coarse.xi.assign(static_cast<std::size_t>(coarse.steps * coarse.channels), 0.0);
  const double scale = 1.0 / std::sqrt(static_cast<double>(ratio));
  for (long j = 0; j < coarse.steps; ++j) {
    for (int k = 0; k < fine.channels; ++k) {
      double sum = 0.0;
      for (long i = j * ratio; i < (j + 1) * ratio; ++i) sum += fine.xi[i * fine.channels + k];
      coarse.xi[j * coarse.channels + k] = sum * scale;
    }
  }
  return coarse;
}

}  // namespace isomp
