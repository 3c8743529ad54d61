#include "isomp/cli/commands.hpp"

#include "isomp/harness.hpp"
#include "isomp/integrator.hpp"
#include "isomp/models.hpp"
#include "isomp/noise.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <ostream>

namespace isomp::cli {

using nlohmann::json;

std::string format_number(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

namespace {

std::string timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm utc{};
  gmtime_r(&now, &utc);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &utc);
  return buf;
}

// Sink for one command: the --out file, or the caller's stream when --out is empty.
class Output {
 public:
  Output(const RunConfig& cfg, std::ostream& fallback) : stream_(&fallback) {
    if (!cfg.out.empty()) {
      file_ = std::make_unique<std::ofstream>(cfg.out);
      if (!*file_) throw ConfigError("cannot open output file " + cfg.out);
      stream_ = file_.get();
    }
  }
  std::ostream& operator*() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

void write_preamble(std::ostream& os, const std::string& command, const RunConfig& cfg,
                    const json& echo) {
  os << "# isomp " << command << "\n";
  os << "# model " << cfg.model << "\n";
  os << "# sampling " << kSamplingMethod << "\n";
  os << "# config " << echo.dump() << "\n";
  if (!cfg.deterministic) os << "# generated " << timestamp() << "\n";
}

void write_config_echo(const RunConfig& cfg, const json& echo) {
  if (cfg.out.empty()) return;
  std::ofstream f(cfg.out + ".config.json");
  if (!f) throw ConfigError("cannot write " + cfg.out + ".config.json");
  f << echo.dump(2) << "\n";
}

HoppeBasis zeitlin_basis(const RunConfig& cfg) {
  const int N = cfg.resolved_n();
  if (cfg.basis_cache.empty()) return HoppeBasis(N);
  if (std::filesystem::exists(cfg.basis_cache)) {
    HoppeBasis b = HoppeBasis::load(cfg.basis_cache);
    if (b.N() != N) throw ConfigError("basis cache " + cfg.basis_cache + " holds a different N");
    return b;
  }
  HoppeBasis b(N);
  b.save(cfg.basis_cache);
  return b;
}

// Calls f(model, X0) with the configured model and its initial state.
template <typename F>
void with_model(const RunConfig& cfg, F&& f) {
  const int n = cfg.resolved_n();
  if (cfg.model == "rigid-body") {
    const RigidBody model(Vec3(cfg.inertia[0], cfg.inertia[1], cfg.inertia[2]), cfg.alpha, cfg.noise);
    f(model, RigidBody::default_initial_state());
  } else if (cfg.model == "manakov") {
    const Manakov model(n, cfg.alpha, cfg.noise);
    f(model, random_state<double>(model, cfg.ic_seed));
  } else if (cfg.model == "point-vortices") {
    std::vector<double> gamma = cfg.intensities;
    if (gamma.empty()) gamma.assign(n, 1.0);
    const PointVortices model(gamma, cfg.alpha, cfg.noise);
    f(model, random_vortex_state(model, cfg.ic_seed));
  } else if (cfg.model == "zeitlin") {
    const ZeitlinEuler model(zeitlin_basis(cfg), cfg.alpha, cfg.noise);
    f(model, random_vorticity(model, cfg.ic_seed));
  } else {
    throw ConfigError("unknown model '" + cfg.model + "'");
  }
}

template <typename Scalar>
void write_state_row(std::ostream& os, long step, double t, const Mat<Scalar>& X) {
  os << step << ',' << format_number(t);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      if constexpr (is_complex_v<Scalar>) {
        os << ',' << format_number(X(i, j).real()) << ',' << format_number(X(i, j).imag());
      } else {
        os << ',' << format_number(X(i, j));
      }
    }
  }
  os << '\n';
}

}  // namespace

void cmd_simulate(const RunConfig& input, std::ostream& out) {
  RunConfig cfg = input;
  cfg.validate();
  cfg.steps = cfg.resolved_steps();
  if (cfg.dump_state && cfg.out.empty()) throw ConfigError("dump_state needs an output path");
  const json echo = to_json(cfg);

  Output sink(cfg, out);
  std::ostream& os = *sink;
  write_preamble(os, "simulate", cfg, echo);
  write_config_echo(cfg, echo);

  with_model(cfg, [&](const auto& model, const auto& X0) {
    using Scalar = typename std::decay_t<decltype(X0)>::Scalar;
    std::unique_ptr<std::ofstream> dump;
    if (cfg.dump_state) {
      dump = std::make_unique<std::ofstream>(cfg.out + ".state.csv");
      if (!*dump) throw ConfigError("cannot write " + cfg.out + ".state.csv");
      *dump << "# state n=" << X0.rows() << " field=" << to_string(model.algebra().field)
            << " layout=row-major" << (is_complex_v<Scalar> ? " interleaved=re,im" : "") << "\n";
      *dump << "step,t,values\n";
    }

    MidpointConfig mc;
    mc.h = cfg.h;
    mc.fp_tol = cfg.fp_tol;
    mc.max_iters = cfg.max_iters;
    mc.truncation_level = cfg.l;
    mc.track_spectrum = false;
    NoiseConfig nc{model.noise_channels(), cfg.h, cfg.l, cfg.seed};

    const DriftTracker<Scalar> tracker(model, X0);
    os << "step,t,hamiltonian_rel_drift,enstrophy_rel_drift,max_eig_drift,fp_iters\n";
    SimulateOptions<Scalar> opts;
    opts.record_stride = 0;
    opts.on_step = [&](const TrajectoryPoint<Scalar>& p) {
      if (p.step % cfg.record_stride != 0 && p.step != cfg.steps) return;
      const DriftRow row = tracker.observe(p);
      os << row.step << ',' << format_number(row.t) << ',' << format_number(row.hamiltonian_rel_drift)
         << ',' << format_number(row.enstrophy_rel_drift) << ',' << format_number(row.max_eig_drift)
         << ',' << row.fp_iters << '\n';
      if (dump) write_state_row<Scalar>(*dump, p.step, p.t, p.X);
    };
    simulate<Scalar>(model, X0, cfg.steps, mc, nc, opts);
  });
  os.flush();
}

void cmd_converge(const RunConfig& input, bool strong, std::ostream& out) {
  RunConfig cfg = input;
  cfg.validate();
  const json echo = to_json(cfg);

  EnsembleConfig ec;
  ec.n_paths = cfg.paths;
  ec.base_seed = cfg.seed;
  ec.T = cfg.T;
  ec.h_list = cfg.h_list;
  ec.h_ref = cfg.h_ref;
  ec.test_function = cfg.test_function;
  ec.truncation_level = cfg.l;
  ec.fp_tol = cfg.fp_tol;
  ec.max_iters = cfg.max_iters;
  ec.threads = cfg.threads;
  ec.exclude_failed = cfg.exclude_failed;
  EnsembleGrid grid;
  try {
    grid = resolve_grid(ec);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }

  ErrorTable table;
  with_model(cfg, [&](const auto& model, const auto& X0) {
    using Scalar = typename std::decay_t<decltype(X0)>::Scalar;
    if (!strong) {
      try {
        make_test_function<Scalar>(cfg.test_function, model);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      table = converge_weak<Scalar>(model, X0, ec);
    } else {
      table = converge_strong<Scalar>(model, X0, ec);
    }
  });

  Output sink(cfg, out);
  std::ostream& os = *sink;
  write_preamble(os, strong ? "converge-strong" : "converge-weak", cfg, echo);
  write_config_echo(cfg, echo);
  os << "# T " << format_number(grid.T);
  if (grid.snapped) os << " (requested " << format_number(cfg.T) << ", rounded to the coarsest step)";
  os << "\n";
  os << "# paths completed " << table.summary.completed << " failed "
     << table.summary.failures.size() << "\n";
  for (const auto& f : table.summary.failures) {
    os << "# failed path " << f.path << " at step " << f.step << ": " << f.message << "\n";
  }
  for (const auto& w : table.fit.warnings) os << "# warning " << w << "\n";
  os << "h,error,stderr,terminal_error,terminal_stderr\n";
  for (const auto& r : table.rows) {
    os << format_number(r.h) << ',' << format_number(r.error) << ',' << format_number(r.stderr_)
       << ',' << format_number(r.terminal) << ',' << format_number(r.terminal_stderr) << '\n';
  }
  os << "slope," << format_number(table.fit.slope) << ",,,\n";
  os.flush();
}

json models_listing() {
  json models = json::array();
  models.push_back({{"name", "rigid-body"},
                    {"algebra", "so(3)"},
                    {"field", "real"},
                    {"noise_channels", 3},
                    {"parameters",
                     {{"inertia", {2.0, 1.0, 2.0 / 3.0}}, {"alpha", RigidBody::kDefaultAlpha}}},
                    {"initial_state", "hat((sin 1.1, 0, cos 1.1))"}});
  models.push_back({{"name", "manakov"},
                    {"algebra", "so(n)"},
                    {"field", "real"},
                    {"noise_channels", "n(n-1)/2"},
                    {"parameters", {{"n", 10}, {"alpha", Manakov::kDefaultAlpha}}},
                    {"initial_state", "unit-norm random element from ic_seed"}});
  models.push_back({{"name", "point-vortices"},
                    {"algebra", "su(2)^n block diagonal"},
                    {"field", "complex"},
                    {"noise_channels", 3},
                    {"parameters",
                     {{"n", 4}, {"intensities", {1.0, 1.0, 1.0, 1.0}}, {"alpha", PointVortices::kDefaultAlpha}}},
                    {"initial_state", "uniform random unit vectors from ic_seed"}});
  models.push_back({{"name", "zeitlin"},
                    {"algebra", "su(N)"},
                    {"field", "complex"},
                    {"noise_channels", "sum of 2l+1 over l = ceil(N/2)..N-1"},
                    {"parameters",
                     {{"N", ZeitlinEuler::kDefaultN},
                      {"alpha", ZeitlinEuler::kDefaultAlpha},
                      {"strong_test_alpha", ZeitlinEuler::kStrongTestAlpha},
                      {"strong_test_N", ZeitlinEuler::kDefaultN}}},
                    {"initial_state", "unit-norm random element from ic_seed"}});
  return json{{"models", models}, {"sampling", kSamplingMethod}};
}

namespace {

// Flag values, applied over the config file only when given on the command line.
struct Flags {
  std::string config;
  RunConfig values;
  bool no_noise = false;
};

void add_run_flags(CLI::App& sub, Flags& f) {
  RunConfig& v = f.values;
  sub.add_option("--config", f.config, "flat JSON config file");
  sub.add_option("--model", v.model, "rigid-body | manakov | point-vortices | zeitlin");
  sub.add_option("--n", v.n, "Manakov n, vortex count, or Zeitlin N");
  sub.add_option("--alpha", v.alpha, "noise amplitude");
  sub.add_flag("--no-noise", f.no_noise, "drop all noise channels");
  sub.add_option("--inertia", v.inertia, "rigid-body inertia")->delimiter(',')->expected(3);
  sub.add_option("--intensities", v.intensities, "vortex intensities")->delimiter(',');
  sub.add_option("--ic-seed", v.ic_seed, "seed of the generated initial state");
  sub.add_option("--basis-cache", v.basis_cache, "Zeitlin basis cache file");
  sub.add_option("--h", v.h, "step size");
  sub.add_option("--steps", v.steps, "number of steps");
  sub.add_option("--T", v.T, "final time");
  sub.add_option("--seed", v.seed, "noise seed");
  sub.add_option("--l", v.l, "truncation level");
  sub.add_option("--fp-tol", v.fp_tol, "fixed-point tolerance (infinity norm)");
  sub.add_option("--max-iters", v.max_iters, "fixed-point iteration cap");
  sub.add_option("--record-stride", v.record_stride, "write every k-th step");
  sub.add_flag("--dump-state", v.dump_state, "write flattened states to <out>.state.csv");
  sub.add_option("--paths", v.paths, "ensemble size");
  sub.add_option("--h-ref", v.h_ref, "reference step size");
  sub.add_option("--h-list", v.h_list, "coarse step sizes")->delimiter(',');
  sub.add_option("--test-function", v.test_function, "sin-sum | hamiltonian | constant");
  sub.add_flag("--exclude-failed", v.exclude_failed, "drop failed paths instead of aborting");
  sub.add_option("--threads", v.threads, "worker threads");
  sub.add_flag("--deterministic", v.deterministic, "omit the timestamp line");
  sub.add_option("--out", v.out, "output file (stdout when empty)");
}

RunConfig resolve(const CLI::App& sub, const Flags& f) {
  RunConfig cfg = f.config.empty() ? RunConfig{} : load_config_file(f.config);
  const RunConfig& v = f.values;
  auto given = [&](const char* name) { return sub.get_option(name)->count() > 0; };
  if (given("--model")) cfg.model = v.model;
  if (given("--n")) cfg.n = v.n;
  if (given("--alpha")) cfg.alpha = v.alpha;
  if (f.no_noise) cfg.noise = false;
  if (given("--inertia")) cfg.inertia = v.inertia;
  if (given("--intensities")) cfg.intensities = v.intensities;
  if (given("--ic-seed")) cfg.ic_seed = v.ic_seed;
  if (given("--basis-cache")) cfg.basis_cache = v.basis_cache;
  if (given("--h")) cfg.h = v.h;
  if (given("--steps")) cfg.steps = v.steps;
  if (given("--T")) {
    cfg.T = v.T;
    if (!given("--steps")) cfg.steps = -1;
  }
  if (given("--seed")) cfg.seed = v.seed;
  if (given("--l")) cfg.l = v.l;
  if (given("--fp-tol")) cfg.fp_tol = v.fp_tol;
  if (given("--max-iters")) cfg.max_iters = v.max_iters;
  if (given("--record-stride")) cfg.record_stride = v.record_stride;
  if (given("--dump-state")) cfg.dump_state = true;
  if (given("--paths")) cfg.paths = v.paths;
  if (given("--h-ref")) cfg.h_ref = v.h_ref;
  if (given("--h-list")) cfg.h_list = v.h_list;
  if (given("--test-function")) cfg.test_function = v.test_function;
  if (given("--exclude-failed")) cfg.exclude_failed = true;
  if (given("--threads")) cfg.threads = v.threads;
  if (given("--deterministic")) cfg.deterministic = true;
  if (given("--out")) cfg.out = v.out;
  return cfg;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Stochastic isospectral midpoint integrator for Lie-Poisson systems", "isomp"};
  app.set_help_flag("--help", "print this help and exit");
  app.require_subcommand(1);
  Flags sim_flags, strong_flags, weak_flags;
  std::string models_out;
  CLI::App* sim = app.add_subcommand("simulate", "integrate one path and write drift diagnostics");
  CLI::App* strong = app.add_subcommand("converge-strong", "coupled strong-error study");
  CLI::App* weak = app.add_subcommand("converge-weak", "coupled weak-error study");
  CLI::App* models = app.add_subcommand("models", "list built-in models as JSON");
  add_run_flags(*sim, sim_flags);
  add_run_flags(*strong, strong_flags);
  add_run_flags(*weak, weak_flags);
  models->add_option("--out", models_out, "output file (stdout when empty)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kConfigError;
  }

  try {
    if (models->parsed()) {
      const std::string text = models_listing().dump(2) + "\n";
      if (models_out.empty()) {
        out << text;
      } else {
        std::ofstream f(models_out);
        if (!f) throw ConfigError("cannot open output file " + models_out);
        f << text;
      }
    } else if (sim->parsed()) {
      cmd_simulate(resolve(*sim, sim_flags), out);
    } else if (strong->parsed()) {
      cmd_converge(resolve(*strong, strong_flags), true, out);
    } else if (weak->parsed()) {
      cmd_converge(resolve(*weak, weak_flags), false, out);
    }
  } catch (const ConfigError& e) {
    err << "isomp: config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const StepFailure& e) {
    err << "isomp: integrator failure at step " << e.step() << ": " << e.what() << "\n";
    return kIntegratorFailure;
  } catch (const EnsembleFailure& e) {
    err << "isomp: integrator failure on path " << e.failure().path << " at step "
        << e.failure().step << ": " << e.what() << "\n";
    return kIntegratorFailure;
  } catch (const std::exception& e) {
    err << "isomp: " << e.what() << "\n";
    return kUnexpected;
  }
  return kSuccess;
}

}  // namespace isomp::cli
