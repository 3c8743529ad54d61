#pragma once

#include <json.hpp>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace isomp::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Flat run configuration. JSON keys match the field names; CLI flags use the same
/// names with dashes (h_ref <-> --h-ref).
struct RunConfig {
  std::string model = "rigid-body";
  /// Manakov n, vortex count, or Zeitlin N. 0 selects the model default.
  int n = 0;
  double alpha = 0.1;
  bool noise = true;
  std::vector<double> inertia{2.0, 1.0, 2.0 / 3.0};
  /// Vortex intensities, empty for all ones.
  std::vector<double> intensities;
  /// Seed of the generated initial state (all models except the rigid body).
  std::uint64_t ic_seed = 1;
  std::string basis_cache;

  double h = 0.00390625;
  /// -1 derives the step count from T.
  long steps = -1;
  double T = 0.1;
  std::uint64_t seed = 1;
  int l = 2;
  double fp_tol = 1e-15;
  int max_iters = 100;
  long record_stride = 1;
  bool dump_state = false;

  long paths = 500;
  double h_ref = 0.0001220703125;
  std::vector<double> h_list{0.015625, 0.0078125, 0.00390625, 0.001953125, 0.0009765625};
  std::string test_function = "sin-sum";
  bool exclude_failed = false;

  int threads = 1;
  bool deterministic = false;
  std::string out;

  /// Model-specific size with defaults filled in.
  int resolved_n() const;
  /// steps, or round(T / h) when steps is -1.
  long resolved_steps() const;

  void validate() const;
};

nlohmann::json to_json(const RunConfig& cfg);

/// Overlays the keys of `j` onto `cfg`. Unknown keys and wrong types raise ConfigError.
void apply_json(RunConfig& cfg, const nlohmann::json& j);

RunConfig load_config_file(const std::string& path);

const std::vector<std::string>& model_names();

}  // namespace isomp::cli
