#include "isomp/harness.hpp"

#include "isomp/models.hpp"
#include "isomp/noise.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <numbers>
#include <sstream>
#include <thread>

namespace isomp {

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    carry_ += (sum_ - t) + x;
  } else {
    carry_ += (x - t) + sum_;
  }
  sum_ = t;
}

void EnsembleConfig::validate() const {
  if (n_paths < 1) throw std::invalid_argument("ensemble: n_paths must be >= 1");
  if (!(T > 0.0)) throw std::invalid_argument("ensemble: T must be positive");
  if (!(h_ref > 0.0)) throw std::invalid_argument("ensemble: h_ref must be positive");
  if (h_list.empty()) throw std::invalid_argument("ensemble: h_list is empty");
  if (threads < 1) throw std::invalid_argument("ensemble: threads must be >= 1");
  if (truncation_level < 1) throw std::invalid_argument("ensemble: truncation level must be >= 1");
  if (!(fp_tol > 0.0)) throw std::invalid_argument("ensemble: fp_tol must be positive");
  if (max_iters < 1) throw std::invalid_argument("ensemble: max_iters must be >= 1");
}

EnsembleGrid resolve_grid(const EnsembleConfig& cfg) {
  cfg.validate();
  EnsembleGrid grid;
  long max_ratio = 1;
  for (double h : cfg.h_list) {
    const double ratio = h / cfg.h_ref;
    const long r = std::lround(ratio);
    if (r < 1 || std::abs(ratio - static_cast<double>(r)) > 1e-9 * ratio || (r & (r - 1)) != 0) {
      std::ostringstream os;
      os << "ensemble: h = " << h << " is not h_ref = " << cfg.h_ref << " times a power of two";
      throw std::invalid_argument(os.str());
    }
    grid.ratios.push_back(r);
    max_ratio = std::max(max_ratio, r);
  }
  grid.h_coarsest = cfg.h_ref * static_cast<double>(max_ratio);
  const long coarse_steps = std::max(1L, std::lround(cfg.T / grid.h_coarsest));
  grid.T = static_cast<double>(coarse_steps) * grid.h_coarsest;
  grid.snapped = std::abs(grid.T - cfg.T) > 1e-12 * cfg.T;
  grid.ref_steps = coarse_steps * max_ratio;
  grid.shared_times = coarse_steps + 1;
  return grid;
}

namespace {

MidpointConfig level_config(const EnsembleConfig& cfg, double h) {
  MidpointConfig m;
  m.h = h;
  m.fp_tol = cfg.fp_tol;
  m.max_iters = cfg.max_iters;
  m.truncation_level = cfg.truncation_level;
  m.track_spectrum = cfg.track_spectrum;
  m.check_orbit = cfg.check_orbit;
  return m;
}

double mean_of(std::span<const double> v) {
  CompensatedSum s;
  for (double x : v) s.add(x);
  return s.value() / static_cast<double>(v.size());
}

// Standard error of the mean with the unbiased sample variance.
double stderr_of(std::span<const double> v, double mean) {
  const std::size_t n = v.size();
  if (n < 2) return 0.0;
  CompensatedSum s;
  for (double x : v) s.add((x - mean) * (x - mean));
  return std::sqrt(s.value() / static_cast<double>(n - 1) / static_cast<double>(n));
}

}  // namespace

template <typename Scalar>
PathSamples<Scalar> run_path(const LiePoissonSystem<Scalar>& model, const Mat<Scalar>& X0,
                             const EnsembleConfig& cfg, const EnsembleGrid& grid,
                             std::uint64_t path) {
  const long max_ratio = std::lround(grid.h_coarsest / cfg.h_ref);
  const NormalPath fine =
      sample_path(path_stream(cfg.base_seed, path), model.noise_channels(), grid.ref_steps);

  PathSamples<Scalar> out;
  out.path = path;
  auto integrate = [&](const NormalPath& normals, long ratio) {
    SimulateOptions<Scalar> opts;
    opts.path_index = path;
    opts.record_stride = max_ratio / ratio;
    const Trajectory<Scalar> traj =
        simulate(model, X0, normals, level_config(cfg, cfg.h_ref * static_cast<double>(ratio)), opts);
    std::vector<Mat<Scalar>> states;
    states.reserve(traj.points.size());
    for (const auto& p : traj.points) states.push_back(p.X);
    out.states.push_back(std::move(states));
    out.max_iterations = std::max(out.max_iterations, traj.max_iterations);
    out.max_spectral_drift = std::max(out.max_spectral_drift, traj.max_spectral_drift);
    out.max_orbit_residual = std::max(out.max_orbit_residual, traj.max_orbit_residual);
  };
  integrate(fine, 1);
  for (long r : grid.ratios) {
    if (r == 1) {
      integrate(fine, 1);
    } else {
      integrate(aggregate_path(fine, r), r);
    }
  }
  return out;
}

template <typename Scalar>
EnsembleSummary run_ensemble(const LiePoissonSystem<Scalar>& model, const Mat<Scalar>& X0,
                             const EnsembleConfig& cfg, const PathObserver<Scalar>& observer) {
  EnsembleSummary summary;
  summary.grid = resolve_grid(cfg);

  std::atomic<long> next{0};
  std::atomic<bool> abort{false};
  std::mutex mu;
  std::exception_ptr fatal;

  auto worker = [&] {
    while (!abort.load()) {
      const long p = next.fetch_add(1);
      if (p >= cfg.n_paths) return;
      try {
        PathSamples<Scalar> samples =
            run_path(model, X0, cfg, summary.grid, static_cast<std::uint64_t>(p));
        if (observer) observer(samples);
        std::lock_guard lock(mu);
        ++summary.completed;
        summary.max_iterations = std::max(summary.max_iterations, samples.max_iterations);
        summary.max_spectral_drift = std::max(summary.max_spectral_drift, samples.max_spectral_drift);
        summary.max_orbit_residual = std::max(summary.max_orbit_residual, samples.max_orbit_residual);
      } catch (const StepFailure& e) {
        std::lock_guard lock(mu);
        summary.failures.push_back({static_cast<std::uint64_t>(p), e.step(), e.what()});
        if (!cfg.exclude_failed) abort = true;
      } catch (...) {
        std::lock_guard lock(mu);
        if (!fatal) fatal = std::current_exception();
        abort = true;
      }
    }
  };

  const long workers = std::min<long>(cfg.threads, cfg.n_paths);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (long w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  std::sort(summary.failures.begin(), summary.failures.end(),
            [](const PathFailure& a, const PathFailure& b) { return a.path < b.path; });
  if (!summary.failures.empty() && !cfg.exclude_failed) {
    const PathFailure& f = summary.failures.front();
    std::ostringstream os;
    os << "ensemble aborted: path " << f.path << " failed: " << f.message;
    throw EnsembleFailure(os.str(), f);
  }
  return summary;
}

template <typename Scalar>
std::vector<std::vector<Mat<Scalar>>> EnsembleStates<Scalar>::level(std::size_t index) const {
  std::vector<std::vector<Mat<Scalar>>> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(p.states.at(index));
  return out;
}

template <typename Scalar>
EnsembleStates<Scalar> collect_ensemble(const LiePoissonSystem<Scalar>& model,
                                        const Mat<Scalar>& X0, const EnsembleConfig& cfg) {
  std::vector<PathSamples<Scalar>> slots(static_cast<std::size_t>(cfg.n_paths));
  std::vector<char> filled(slots.size(), 0);
  EnsembleStates<Scalar> out;
  out.summary = run_ensemble<Scalar>(model, X0, cfg, [&](const PathSamples<Scalar>& s) {
    slots[s.path] = s;
    filled[s.path] = 1;
  });
  for (std::size_t p = 0; p < slots.size(); ++p) {
    if (filled[p]) out.paths.push_back(std::move(slots[p]));
  }
  return out;
}

template <typename Scalar>
StrongError strong_error(const std::vector<std::vector<Mat<Scalar>>>& ref,
                         const std::vector<std::vector<Mat<Scalar>>>& coarse) {
  if (ref.size() != coarse.size()) throw SizeMismatchError("strong_error: path count mismatch");
  StrongError out;
  if (ref.empty()) return out;
  const std::size_t times = ref.front().size();
  for (std::size_t p = 0; p < ref.size(); ++p) {
    if (ref[p].size() != times || coarse[p].size() != times) {
      throw SizeMismatchError("strong_error: output time count mismatch");
    }
  }
  std::vector<double> d2(ref.size());
  for (std::size_t t = 0; t < times; ++t) {
    for (std::size_t p = 0; p < ref.size(); ++p) d2[p] = (ref[p][t] - coarse[p][t]).squaredNorm();
    const double m = mean_of(d2);
    const double e = std::sqrt(m);
    const double se = e > 0.0 ? stderr_of(d2, m) / (2.0 * e) : 0.0;
    if (t == 0 || e > out.error) {
      out.error = e;
      out.stderr_ = se;
      out.argmax_time = static_cast<long>(t);
    }
    if (t + 1 == times) {
      out.terminal = e;
      out.terminal_stderr = se;
    }
  }
  return out;
}

WeakError weak_error(std::span<const double> phi_ref, std::span<const double> phi_coarse) {
  if (phi_ref.size() != phi_coarse.size()) {
    throw SizeMismatchError("weak_error: path count mismatch");
  }
  WeakError out;
  if (phi_ref.empty()) return out;
  std::vector<double> diff(phi_ref.size());
  for (std::size_t p = 0; p < diff.size(); ++p) diff[p] = phi_ref[p] - phi_coarse[p];
  const double m = mean_of(diff);
  out.error = std::abs(m);
  out.stderr_ = stderr_of(diff, m);
  return out;
}

template <typename Scalar>
TestFunction<Scalar> make_test_function(const std::string& name,
                                        const LiePoissonSystem<Scalar>& model) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  if (name == "constant") return [](const Mat<Scalar>&) { return 1.0; };
  if (name == "hamiltonian") {
    return [&model](const Mat<Scalar>& X) { return model.hamiltonian(X); };
  }
  if (name == "sin-sum") {
    if constexpr (std::is_same_v<Scalar, double>) {
      if (dynamic_cast<const RigidBody*>(&model) != nullptr) {
        return [](const RealMat& X) {
          const Vec3 x = unhat(X);
          return std::sin(two_pi * x(0)) + std::sin(two_pi * x(1)) + std::sin(two_pi * x(2));
        };
      }
    } else {
      if (const auto* pv = dynamic_cast<const PointVortices*>(&model)) {
        return [pv](const ComplexMat& X) {
          double s = 0.0;
          for (const Vec3& x : pv->positions(X)) {
            s += std::sin(two_pi * x(0)) + std::sin(two_pi * x(1)) + std::sin(two_pi * x(2));
          }
          return s;
        };
      }
    }
  }
  throw std::invalid_argument("test function '" + name + "' is not defined for model " +
                              model.name());
}

template <typename Scalar>
WeakError weak_error(const std::vector<Mat<Scalar>>& ref, const std::vector<Mat<Scalar>>& coarse,
                     const TestFunction<Scalar>& phi) {
  if (ref.size() != coarse.size()) throw SizeMismatchError("weak_error: path count mismatch");
  std::vector<double> a(ref.size()), b(coarse.size());
  for (std::size_t p = 0; p < ref.size(); ++p) {
    a[p] = phi(ref[p]);
    b[p] = phi(coarse[p]);
  }
  return weak_error(std::span<const double>(a), std::span<const double>(b));
}

FitResult fit_order(std::span<const double> h, std::span<const double> err) {
  if (h.size() != err.size()) throw SizeMismatchError("fit_order: length mismatch");
  FitResult fit;
  std::vector<double> x, y;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (!(err[i] > 0.0) || !std::isfinite(err[i]) || !(h[i] > 0.0)) {
      std::ostringstream os;
      os << "fit_order: dropping point h = " << h[i] << " with error " << err[i];
      fit.warnings.push_back(os.str());
      continue;
    }
    x.push_back(std::log(h[i]));
    y.push_back(std::log(err[i]));
  }
  if (x.size() < 2) throw std::invalid_argument("fit_order: fewer than two positive errors");
  const double mx = mean_of(x);
  const double my = mean_of(y);
  CompensatedSum sxx, sxy;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx.add((x[i] - mx) * (x[i] - mx));
    sxy.add((x[i] - mx) * (y[i] - my));
  }
  if (!(sxx.value() > 0.0)) throw std::invalid_argument("fit_order: step sizes must differ");
  fit.slope = sxy.value() / sxx.value();
  fit.intercept = my - fit.slope * mx;
  CompensatedSum ss;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = y[i] - (fit.intercept + fit.slope * x[i]);
    ss.add(r * r);
  }
  fit.residual = std::sqrt(ss.value() / static_cast<double>(x.size()));
  fit.points = static_cast<int>(x.size());
  return fit;
}

namespace {

FitResult fit_rows(const std::vector<ErrorRow>& rows) {
  std::vector<double> h, e;
  for (const auto& r : rows) {
    h.push_back(r.h);
    e.push_back(r.error);
  }
  return fit_order(h, e);
}

}  // namespace

template <typename Scalar>
ErrorTable converge_strong(const LiePoissonSystem<Scalar>& model, const Mat<Scalar>& X0,
                           const EnsembleConfig& cfg) {
  const EnsembleStates<Scalar> ens = collect_ensemble(model, X0, cfg);
  ErrorTable table;
  table.mode = "strong";
  table.summary = ens.summary;
  const auto ref = ens.level(0);
  for (std::size_t i = 0; i < cfg.h_list.size(); ++i) {
    const StrongError e = strong_error<Scalar>(ref, ens.level(i + 1));
    table.rows.push_back({cfg.h_list[i], e.error, e.stderr_, e.terminal, e.terminal_stderr});
  }
  table.fit = fit_rows(table.rows);
  return table;
}

template <typename Scalar>
ErrorTable converge_weak(const LiePoissonSystem<Scalar>& model, const Mat<Scalar>& X0,
                         const EnsembleConfig& cfg) {
  const TestFunction<Scalar> phi = make_test_function<Scalar>(cfg.test_function, model);
  const std::size_t levels = cfg.h_list.size() + 1;
  const auto n = static_cast<std::size_t>(cfg.n_paths);
  std::vector<std::vector<double>> values(levels, std::vector<double>(n, 0.0));
  std::vector<char> filled(n, 0);
  ErrorTable table;
  table.mode = "weak";
  table.summary = run_ensemble<Scalar>(model, X0, cfg, [&](const PathSamples<Scalar>& s) {
    for (std::size_t l = 0; l < levels; ++l) values[l][s.path] = phi(s.states[l].back());
    filled[s.path] = 1;
  });
  std::vector<std::vector<double>> kept(levels);
  for (std::size_t p = 0; p < n; ++p) {
    if (!filled[p]) continue;
    for (std::size_t l = 0; l < levels; ++l) kept[l].push_back(values[l][p]);
  }
  for (std::size_t i = 0; i < cfg.h_list.size(); ++i) {
    const WeakError e = weak_error(std::span<const double>(kept[0]), std::span<const double>(kept[i + 1]));
    table.rows.push_back({cfg.h_list[i], e.error, e.stderr_, e.error, e.stderr_});
  }
  table.fit = fit_rows(table.rows);
  return table;
}

double relative_departure(double value, double initial) {
  return initial != 0.0 ? (value - initial) / std::abs(initial) : value - initial;
}

namespace {

template <typename Scalar>
double enstrophy_of(const Mat<Scalar>& X) {
  if constexpr (is_complex_v<Scalar>) {
    return (X * X).trace().real();
  } else {
    return (X * X).trace();
  }
}

}  // namespace

template <typename Scalar>
DriftTracker<Scalar>::DriftTracker(const LiePoissonSystem<Scalar>& model, const Mat<Scalar>& X0)
    : model_(model),
      spectrum0_(spectrum<Scalar>(X0)),
      h0_(model.hamiltonian(X0)),
      enstrophy0_(enstrophy_of<Scalar>(X0)) {}

template <typename Scalar>
DriftRow DriftTracker<Scalar>::observe(const TrajectoryPoint<Scalar>& point) const {
  DriftRow row;
  row.step = point.step;
  row.t = point.t;
  row.max_eig_drift = spectral_distance(spectrum0_, spectrum<Scalar>(point.X));
  row.hamiltonian_rel_drift = relative_departure(model_.hamiltonian(point.X), h0_);
  row.enstrophy_rel_drift = relative_departure(enstrophy_of<Scalar>(point.X), enstrophy0_);
  row.fp_iters = point.record.iterations;
  return row;
}

template <typename Scalar>
std::vector<DriftRow> drift_report(const LiePoissonSystem<Scalar>& model,
                                   const Trajectory<Scalar>& trajectory) {
  std::vector<DriftRow> rows;
  if (trajectory.points.empty()) return rows;
  const DriftTracker<Scalar> tracker(model, trajectory.points.front().X);
  for (const auto& p : trajectory.points) rows.push_back(tracker.observe(p));
  return rows;
}

#define ISOMP_INSTANTIATE(S)                                                                     \
  template EnsembleSummary run_ensemble<S>(const LiePoissonSystem<S>&, const Mat<S>&,           \
                                           const EnsembleConfig&, const PathObserver<S>&);      \
  template PathSamples<S> run_path<S>(const LiePoissonSystem<S>&, const Mat<S>&,                \
                                      const EnsembleConfig&, const EnsembleGrid&, std::uint64_t); \
  template struct EnsembleStates<S>;                                                             \
  template EnsembleStates<S> collect_ensemble<S>(const LiePoissonSystem<S>&, const Mat<S>&,     \
                                                 const EnsembleConfig&);                         \
  template StrongError strong_error<S>(const std::vector<std::vector<Mat<S>>>&,                 \
                                       const std::vector<std::vector<Mat<S>>>&);                 \
  template TestFunction<S> make_test_function<S>(const std::string&, const LiePoissonSystem<S>&); \
  template WeakError weak_error<S>(const std::vector<Mat<S>>&, const std::vector<Mat<S>>&,      \
                                   const TestFunction<S>&);                                      \
  template ErrorTable converge_strong<S>(const LiePoissonSystem<S>&, const Mat<S>&,             \
                                         const EnsembleConfig&);                                 \
  template ErrorTable converge_weak<S>(const LiePoissonSystem<S>&, const Mat<S>&,               \
                                       const EnsembleConfig&);                                   \
  template class DriftTracker<S>;                                                                \
  template std::vector<DriftRow> drift_report<S>(const LiePoissonSystem<S>&, const Trajectory<S>&);

ISOMP_INSTANTIATE(double)
ISOMP_INSTANTIATE(Complex)

#undef ISOMP_INSTANTIATE

}  // namespace isomp
