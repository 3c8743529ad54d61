#pragma once

// Monte Carlo driver for coupled convergence studies. Every path draws one fine
// Brownian path at h_ref; coarser levels integrate the aggregated path, so errors
// measure the scheme and not independent noise.

#include "isomp/integrator.hpp"
#include "isomp/system.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace isomp {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x);
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

struct EnsembleConfig {
  long n_paths = 500;
  std::uint64_t base_seed = 1;
  double T = 0.1;
  /// Coarse step sizes, each h_ref times a power of two.
  std::vector<double> h_list;
  double h_ref = 0.0;
  std::string test_function = "sin-sum";
  int truncation_level = 2;
  double fp_tol = 1e-15;
  int max_iters = 100;
  int threads = 1;
  /// Drop failed paths (and report them) instead of aborting the study.
  bool exclude_failed = false;
  bool check_orbit = false;
  bool track_spectrum = false;

  void validate() const;
};

/// Time grid shared by every level: multiples of the coarsest step up to T,
/// where T is rounded to the nearest positive multiple of that step.
struct EnsembleGrid {
  double T = 0.0;
  double h_coarsest = 0.0;
  long ref_steps = 0;
  long shared_times = 0;        // number of shared output times, including t = 0
  std::vector<long> ratios;     // h / h_ref for each entry of h_list
  bool snapped = false;         // T differed from the requested horizon
};

EnsembleGrid resolve_grid(const EnsembleConfig& cfg);

/// States of one path at the shared times: states[level][time], level 0 being the
/// reference and level i + 1 the i-th entry of h_list.
template <typename Scalar>
struct PathSamples {
  std::uint64_t path = 0;
  std::vector<std::vector<Mat<Scalar>>> states;
  int max_iterations = 0;
  double max_spectral_drift = 0.0;
  double max_orbit_residual = 0.0;
};

struct PathFailure {
  std::uint64_t path = 0;
  long step = -1;
  std::string message;
};

struct EnsembleSummary {
  EnsembleGrid grid;
  long completed = 0;
  std::vector<PathFailure> failures;
  int max_iterations = 0;
  double max_spectral_drift = 0.0;
  double max_orbit_residual = 0.0;
};

class EnsembleFailure : public std::runtime_error {
 public:
  EnsembleFailure(const std::string& what, PathFailure failure)
      : std::runtime_error(what), failure_(std::move(failure)) {}
  const PathFailure& failure() const { return failure_; }

 private:
  PathFailure failure_;
};

/// Receives each completed path. Called from worker threads, possibly concurrently,
/// never twice for the same path.
template <typename Scalar>
using PathObserver = std::function<void(const PathSamples<Scalar>&)>;

template <typename Scalar>
EnsembleSummary run_ensemble(const LiePoissonSystem<Scalar>& model, const Mat<Scalar>& X0,
                             const EnsembleConfig& cfg, const PathObserver<Scalar>& observer);

/// Runs one path of the ensemble (no threading, failures propagate as StepFailure).
template <typename Scalar>
PathSamples<Scalar> run_path(const LiePoissonSystem<Scalar>& model, const Mat<Scalar>& X0,
                             const EnsembleConfig& cfg, const EnsembleGrid& grid,
                             std::uint64_t path);

/// All successful paths, ordered by path index.
template <typename Scalar>
struct EnsembleStates {
  EnsembleSummary summary;
  std::vector<PathSamples<Scalar>> paths;

  /// states[path][time] for one level.
  std::vector<std::vector<Mat<Scalar>>> level(std::size_t index) const;
};

template <typename Scalar>
EnsembleStates<Scalar> collect_ensemble(const LiePoissonSystem<Scalar>& model,
                                        const Mat<Scalar>& X0, const EnsembleConfig& cfg);

struct StrongError {
  double error = 0.0;  // sup over shared times of the RMS distance
  double stderr_ = 0.0;
  long argmax_time = 0;
  double terminal = 0.0;
  double terminal_stderr = 0.0;
};

/// ref[path][time] vs coarse[path][time], Frobenius distances.
template <typename Scalar>
StrongError strong_error(const std::vector<std::vector<Mat<Scalar>>>& ref,
                         const std::vector<std::vector<Mat<Scalar>>>& coarse);

struct WeakError {
  double error = 0.0;
  double stderr_ = 0.0;
};

/// |mean(phi_ref - phi_coarse)| with the standard error of the paired differences.
WeakError weak_error(std::span<const double> phi_ref, std::span<const double> phi_coarse);

template <typename Scalar>
using TestFunction = std::function<double(const Mat<Scalar>&)>;

/// "sin-sum" (rigid body and point vortices: sum of sin(2 pi x) over all
/// coordinates), "hamiltonian", "constant". Throws std::invalid_argument otherwise.
template <typename Scalar>
TestFunction<Scalar> make_test_function(const std::string& name,
                                        const LiePoissonSystem<Scalar>& model);

template <typename Scalar>
WeakError weak_error(const std::vector<Mat<Scalar>>& ref, const std::vector<Mat<Scalar>>& coarse,
                     const TestFunction<Scalar>& phi);

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  /// RMS of the log-space residuals.
  double residual = 0.0;
  int points = 0;
  std::vector<std::string> warnings;
};

/// Least-squares line through (ln h, ln err). Nonpositive or non-finite errors are
/// dropped with a warning; fewer than two remaining points throws.
FitResult fit_order(std::span<const double> h, std::span<const double> err);

struct ErrorRow {
  double h = 0.0;
  double error = 0.0;
  double stderr_ = 0.0;
  /// Strong studies only: error at the final time.
  double terminal = 0.0;
  double terminal_stderr = 0.0;
};

struct ErrorTable {
  std::string mode;  // "strong" or "weak"
  std::vector<ErrorRow> rows;
  FitResult fit;
  EnsembleSummary summary;
};

template <typename Scalar>
ErrorTable converge_strong(const LiePoissonSystem<Scalar>& model, const Mat<Scalar>& X0,
                           const EnsembleConfig& cfg);

/// Only the scalar test-function values are kept per path, so very large ensembles
/// run in bounded memory.
template <typename Scalar>
ErrorTable converge_weak(const LiePoissonSystem<Scalar>& model, const Mat<Scalar>& X0,
                         const EnsembleConfig& cfg);

struct DriftRow {
  long step = 0;
  double t = 0.0;
  double max_eig_drift = 0.0;
  double hamiltonian_rel_drift = 0.0;
  double enstrophy_rel_drift = 0.0;
  int fp_iters = 0;
};

/// Departures from the initial state: sorted-eigenvalue distance, and
/// (H - H0) / |H0| and (C - C0) / |C0| (plain differences when the initial value is 0).
template <typename Scalar>
class DriftTracker {
 public:
  DriftTracker(const LiePoissonSystem<Scalar>& model, const Mat<Scalar>& X0);
  DriftRow observe(const TrajectoryPoint<Scalar>& point) const;

 private:
  const LiePoissonSystem<Scalar>& model_;
  std::vector<Complex> spectrum0_;
  double h0_;
  double enstrophy0_;
};

template <typename Scalar>
std::vector<DriftRow> drift_report(const LiePoissonSystem<Scalar>& model,
                                   const Trajectory<Scalar>& trajectory);

double relative_departure(double value, double initial);

#define ISOMP_DECLARE_HARNESS(S)                                                                \
  extern template EnsembleSummary run_ensemble<S>(const LiePoissonSystem<S>&, const Mat<S>&,    \
                                                  const EnsembleConfig&, const PathObserver<S>&); \
  extern template PathSamples<S> run_path<S>(const LiePoissonSystem<S>&, const Mat<S>&,         \
                                             const EnsembleConfig&, const EnsembleGrid&,        \
                                             std::uint64_t);                                    \
  extern template struct EnsembleStates<S>;                                                     \
  extern template EnsembleStates<S> collect_ensemble<S>(const LiePoissonSystem<S>&,             \
                                                        const Mat<S>&, const EnsembleConfig&);  \
  extern template StrongError strong_error<S>(const std::vector<std::vector<Mat<S>>>&,          \
                                              const std::vector<std::vector<Mat<S>>>&);         \
  extern template TestFunction<S> make_test_function<S>(const std::string&,                     \
                                                        const LiePoissonSystem<S>&);            \
  extern template WeakError weak_error<S>(const std::vector<Mat<S>>&, const std::vector<Mat<S>>&, \
                                          const TestFunction<S>&);                              \
  extern template ErrorTable converge_strong<S>(const LiePoissonSystem<S>&, const Mat<S>&,      \
                                                const EnsembleConfig&);                         \
  extern template ErrorTable converge_weak<S>(const LiePoissonSystem<S>&, const Mat<S>&,        \
                                              const EnsembleConfig&);                           \
  extern template class DriftTracker<S>;                                                        \
  extern template std::vector<DriftRow> drift_report<S>(const LiePoissonSystem<S>&,            \
                                                        const Trajectory<S>&);

ISOMP_DECLARE_HARNESS(double)
ISOMP_DECLARE_HARNESS(Complex)

#undef ISOMP_DECLARE_HARNESS

}  // namespace isomp
