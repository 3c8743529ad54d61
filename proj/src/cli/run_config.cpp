#include "isomp/cli/run_config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace isomp::cli {

using nlohmann::json;

namespace {

[[noreturn]] void type_error(const std::string& key, const char* expected, const json& v) {
  throw ConfigError("config key '" + key + "': expected " + expected + ", got " + v.dump());
}

double as_double(const std::string& key, const json& v) {
  if (!v.is_number()) type_error(key, "a number", v);
  return v.get<double>();
}

long as_long(const std::string& key, const json& v) {
  if (!v.is_number_integer()) type_error(key, "an integer", v);
  return v.get<long>();
}

std::uint64_t as_u64(const std::string& key, const json& v) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
    type_error(key, "a nonnegative integer", v);
  }
  return v.get<std::uint64_t>();
}

bool as_bool(const std::string& key, const json& v) {
  if (!v.is_boolean()) type_error(key, "a boolean", v);
  return v.get<bool>();
}

std::string as_string(const std::string& key, const json& v) {
  if (!v.is_string()) type_error(key, "a string", v);
  return v.get<std::string>();
}

std::vector<double> as_doubles(const std::string& key, const json& v) {
  if (!v.is_array()) type_error(key, "an array of numbers", v);
  std::vector<double> out;
  for (const auto& x : v) out.push_back(as_double(key, x));
  return out;
}

using Setter = std::function<void(RunConfig&, const std::string&, const json&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"model", [](RunConfig& c, const std::string& k, const json& v) { c.model = as_string(k, v); }},
      {"n", [](RunConfig& c, const std::string& k, const json& v) { c.n = static_cast<int>(as_long(k, v)); }},
      {"alpha", [](RunConfig& c, const std::string& k, const json& v) { c.alpha = as_double(k, v); }},
      {"noise", [](RunConfig& c, const std::string& k, const json& v) { c.noise = as_bool(k, v); }},
      {"inertia", [](RunConfig& c, const std::string& k, const json& v) { c.inertia = as_doubles(k, v); }},
      {"intensities",
       [](RunConfig& c, const std::string& k, const json& v) { c.intensities = as_doubles(k, v); }},
      {"ic_seed", [](RunConfig& c, const std::string& k, const json& v) { c.ic_seed = as_u64(k, v); }},
      {"basis_cache",
       [](RunConfig& c, const std::string& k, const json& v) { c.basis_cache = as_string(k, v); }},
      {"h", [](RunConfig& c, const std::string& k, const json& v) { c.h = as_double(k, v); }},
      {"steps", [](RunConfig& c, const std::string& k, const json& v) { c.steps = as_long(k, v); }},
      {"T", [](RunConfig& c, const std::string& k, const json& v) { c.T = as_double(k, v); }},
      {"seed", [](RunConfig& c, const std::string& k, const json& v) { c.seed = as_u64(k, v); }},
      {"l", [](RunConfig& c, const std::string& k, const json& v) { c.l = static_cast<int>(as_long(k, v)); }},
      {"fp_tol", [](RunConfig& c, const std::string& k, const json& v) { c.fp_tol = as_double(k, v); }},
      {"max_iters",
       [](RunConfig& c, const std::string& k, const json& v) { c.max_iters = static_cast<int>(as_long(k, v)); }},
      {"record_stride",
       [](RunConfig& c, const std::string& k, const json& v) { c.record_stride = as_long(k, v); }},
      {"dump_state", [](RunConfig& c, const std::string& k, const json& v) { c.dump_state = as_bool(k, v); }},
      {"paths", [](RunConfig& c, const std::string& k, const json& v) { c.paths = as_long(k, v); }},
      {"h_ref", [](RunConfig& c, const std::string& k, const json& v) { c.h_ref = as_double(k, v); }},
      {"h_list", [](RunConfig& c, const std::string& k, const json& v) { c.h_list = as_doubles(k, v); }},
      {"test_function",
       [](RunConfig& c, const std::string& k, const json& v) { c.test_function = as_string(k, v); }},
      {"exclude_failed",
       [](RunConfig& c, const std::string& k, const json& v) { c.exclude_failed = as_bool(k, v); }},
      {"threads",
       [](RunConfig& c, const std::string& k, const json& v) { c.threads = static_cast<int>(as_long(k, v)); }},
      {"deterministic",
       [](RunConfig& c, const std::string& k, const json& v) { c.deterministic = as_bool(k, v); }},
      {"out", [](RunConfig& c, const std::string& k, const json& v) { c.out = as_string(k, v); }},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& model_names() {
  static const std::vector<std::string> names{"rigid-body", "manakov", "point-vortices", "zeitlin"};
  return names;
}

int RunConfig::resolved_n() const {
  if (n != 0) return n;
  if (model == "manakov") return 10;
  if (model == "point-vortices") return intensities.empty() ? 4 : static_cast<int>(intensities.size());
  if (model == "zeitlin") return 12;
  return 3;
}

long RunConfig::resolved_steps() const {
  if (steps >= 0) return steps;
  return std::lround(T / h);
}

void RunConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  bool known = false;
  for (const auto& m : model_names()) known = known || m == model;
  if (!known) fail("unknown model '" + model + "'");
  if (!std::isfinite(alpha)) fail("alpha must be finite");
  if (!(h > 0.0) || !std::isfinite(h)) fail("h must be positive");
  if (steps < -1) fail("steps must be nonnegative");
  if (steps == -1 && !(T >= 0.0 && std::isfinite(T))) fail("T must be nonnegative");
  if (l < 1) fail("truncation level l must be >= 1");
  if (!(fp_tol > 0.0)) fail("fp_tol must be positive");
  if (max_iters < 1) fail("max_iters must be >= 1");
  if (record_stride < 1) fail("record_stride must be >= 1");
  if (paths < 1) fail("paths must be >= 1");
  if (!(h_ref > 0.0)) fail("h_ref must be positive");
  if (h_list.empty()) fail("h_list must not be empty");
  for (double x : h_list) {
    if (!(x > 0.0)) fail("h_list entries must be positive");
  }
  if (threads < 1) fail("threads must be >= 1");
  if (model == "rigid-body") {
    if (inertia.size() != 3) fail("inertia needs three entries");
    for (double x : inertia) {
      if (!(x > 0.0)) fail("inertia entries must be positive");
    }
  }
  const int size = resolved_n();
  if (model == "manakov" && size < 3) fail("manakov needs n >= 3");
  if (model == "point-vortices") {
    if (size < 1) fail("point-vortices needs n >= 1");
    if (!intensities.empty() && static_cast<int>(intensities.size()) != size) {
      fail("intensities must have n entries");
    }
  }
  if (model == "zeitlin" && size < 2) fail("zeitlin needs N >= 2");
}

json to_json(const RunConfig& c) {
  return json{{"model", c.model},
              {"n", c.resolved_n()},
              {"alpha", c.alpha},
              {"noise", c.noise},
              {"inertia", c.inertia},
              {"intensities", c.intensities},
              {"ic_seed", c.ic_seed},
              {"basis_cache", c.basis_cache},
              {"h", c.h},
              {"steps", c.steps},
              {"T", c.T},
              {"seed", c.seed},
              {"l", c.l},
              {"fp_tol", c.fp_tol},
              {"max_iters", c.max_iters},
              {"record_stride", c.record_stride},
              {"dump_state", c.dump_state},
              {"paths", c.paths},
              {"h_ref", c.h_ref},
              {"h_list", c.h_list},
              {"test_function", c.test_function},
              {"exclude_failed", c.exclude_failed},
              {"threads", c.threads},
              {"deterministic", c.deterministic},
              {"out", c.out}};
}

void apply_json(RunConfig& cfg, const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  const auto& table = setters();
  for (const auto& [key, value] : j.items()) {
    const auto it = table.find(key);
    if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
    it->second(cfg, key, value);
  }
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
  RunConfig cfg;
  apply_json(cfg, j);
  return cfg;
}

}  // namespace isomp::cli
