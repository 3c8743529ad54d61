#pragma once

// Stochastic isospectral midpoint scheme on g* and the cotangent-bundle
// midpoint scheme on T*G it descends from.
//
//   G       = grad H0(X~)* h + sum_k grad Hk(X~)* zeta_k sqrt(h)
//   X_n     = (I - G/2) X~ (I + G/2)
//   X_{n+1} = (I + G/2) X~ (I - G/2)
//
// X~ is found by the fixed-point map X~ <- (I - G(X~)/2)^-1 X_n (I + G(X~)/2)^-1
// started from X_n. Each step is a conjugation X_{n+1} = cay^-1(-G/2) X_n cay(-G/2),
// so spectra (and every Casimir tr f(X)) are preserved up to roundoff. X_{n+1} is
// projected back onto g after each step so roundoff never accumulates off the algebra.

#include "isomp/algebra.hpp"
#include "isomp/noise.hpp"
#include "isomp/system.hpp"

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace isomp {

struct MidpointConfig {
  double h = 0.0;
  /// Infinity-norm tolerance on the fixed-point update, scaled by max(1, ||X_n||_inf).
  double fp_tol = 1e-15;
  int max_iters = 100;
  int truncation_level = 2;
  /// Abort once the update has grown this many iterations in a row.
  int divergence_window = 5;
  /// Compute the step-to-step spectral drift in StepRecord (one eigensolve per step).
  bool track_spectrum = true;
  /// Evaluate the Cayley orbit witness at every step (StepRecord::orbit_residual).
  bool check_orbit = false;

  void validate() const;
};

struct StepRecord {
  int iterations = 0;
  double fp_residual = 0.0;
  /// ||X_n - (I - G/2) X~ (I + G/2)||_inf at the accepted X~.
  double relation_residual = 0.0;
  /// max |sorted spec(X_{n+1}) - sorted spec(X_n)|; 0 when not tracked.
  double spectral_drift = 0.0;
  /// ||X_{n+1} - g* X_n (g*)^-1||_F; 0 when not checked.
  double orbit_residual = 0.0;
};

class NonConvergenceError : public std::runtime_error {
 public:
  NonConvergenceError(const std::string& what, int iterations, double last_residual)
      : std::runtime_error(what), iterations_(iterations), last_residual_(last_residual) {}
  int iterations() const { return iterations_; }
  double last_residual() const { return last_residual_; }

 private:
  int iterations_;
  double last_residual_;
};

/// A failure inside simulate(), tagged with the index of the step that failed.
class StepFailure : public std::runtime_error {
 public:
  StepFailure(const std::string& what, long step) : std::runtime_error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

template <typename Scalar>
Mat<Scalar> psi_tilde(const LiePoissonSystem<Scalar>& model, const Mat<Scalar>& X, double h,
                      std::span<const double> zeta);

template <typename Scalar>
struct ImplicitSolution {
  Mat<Scalar> midpoint;  // X~
  Mat<Scalar> G;         // psi_tilde(X~)
  StepRecord record;
};

template <typename Scalar>
ImplicitSolution<Scalar> solve_implicit(const LiePoissonSystem<Scalar>& model,
                                        const Mat<Scalar>& X_n, double h,
                                        std::span<const double> zeta, const MidpointConfig& cfg);

template <typename Scalar>
struct StepResult {
  Mat<Scalar> next;
  Mat<Scalar> midpoint;
  Mat<Scalar> G;
  StepRecord record;
};

/// One step X_n -> X_{n+1} with step size cfg.h and truncated increments zeta.
template <typename Scalar>
StepResult<Scalar> step(const LiePoissonSystem<Scalar>& model, const Mat<Scalar>& X_n,
                        std::span<const double> zeta, const MidpointConfig& cfg);

template <typename Scalar>
struct OrbitWitness {
  Mat<Scalar> g;
  double residual = 0.0;
};

/// g with g* = cay^-1(-G/2) and residual ||X_{n+1} - g* X_n (g*)^-1||_F, X_{n+1}
/// rebuilt from (X~, G).
template <typename Scalar>
OrbitWitness<Scalar> orbit_witness(const Mat<Scalar>& X_n, const Mat<Scalar>& midpoint,
                                   const Mat<Scalar>& G);

template <typename Scalar>
struct TrajectoryPoint {
  long step = 0;
  double t = 0.0;
  Mat<Scalar> X;
  StepRecord record;
};

template <typename Scalar>
struct Trajectory {
  std::vector<TrajectoryPoint<Scalar>> points;
  Mat<Scalar> final_state;
  long steps = 0;
  /// max over steps of |sorted spec(X_k) - sorted spec(X_0)|
  double max_spectral_drift = 0.0;
  int max_iterations = 0;
  /// max over steps of orbit_residual / ||X_n||_F (unscaled when X_n = 0)
  double max_orbit_residual = 0.0;
};

template <typename Scalar>
struct SimulateOptions {
  std::uint64_t path_index = 0;
  /// Store every `record_stride`-th state in Trajectory::points (0 stores none).
  long record_stride = 1;
  /// Called after every step (and once for the initial state with step = 0).
  std::function<void(const TrajectoryPoint<Scalar>&)> on_step;
};

/// Integrates `steps` steps with noise drawn from path_stream(noise.seed, path_index).
template <typename Scalar>
Trajectory<Scalar> simulate(const LiePoissonSystem<Scalar>& model, const Mat<Scalar>& X0,
                            long steps, const MidpointConfig& cfg, const NoiseConfig& noise,
                            const SimulateOptions<Scalar>& options = {});

template <typename Scalar>
struct CotangentState {
  Mat<Scalar> Q;
  Mat<Scalar> P;
};

/// Same, with the truncated increments taken from a given path of standard normals
/// (one row per step); the path's length sets the step count.
template <typename Scalar>
Trajectory<Scalar> simulate(const LiePoissonSystem<Scalar>& model, const Mat<Scalar>& X0,
                            const NormalPath& normals, const MidpointConfig& cfg,
                            const SimulateOptions<Scalar>& options = {});

/// mu(Q, P) = Q* P / 2 - J P* Q J / (2c)
template <typename Scalar>
Mat<Scalar> momentum_map(const AlgebraSpec& spec, const Mat<Scalar>& Q, const Mat<Scalar>& P);

/// g . (Q, P) = (g Q, (g^-1)* P)
template <typename Scalar>
CotangentState<Scalar> act(const Mat<Scalar>& g, const CotangentState<Scalar>& state);

template <typename Scalar>
struct CotangentStepResult {
  CotangentState<Scalar> state;
  StepRecord record;
};

/// Implicit midpoint step of dQ = Q B o dW, dP = -P B* o dW with
/// B = grad H0(mu) dt + sum_k grad Hk(mu) o dW^k, as the composition of the
/// implicit half step (Q_n, P_n) -> (Q~, P~) and the explicit half step.
template <typename Scalar>
CotangentStepResult<Scalar> cotangent_step(const LiePoissonSystem<Scalar>& model,
                                          const CotangentState<Scalar>& state,
                                          std::span<const double> zeta,
                                          const MidpointConfig& cfg);

#define ISOMP_DECLARE_INTEGRATOR(S)                                                             \
  extern template Mat<S> psi_tilde<S>(const LiePoissonSystem<S>&, const Mat<S>&, double,       \
                                      std::span<const double>);                                \
  extern template ImplicitSolution<S> solve_implicit<S>(                                       \
      const LiePoissonSystem<S>&, const Mat<S>&, double, std::span<const double>,              \
      const MidpointConfig&);                                                                   \
  extern template StepResult<S> step<S>(const LiePoissonSystem<S>&, const Mat<S>&,             \
                                        std::span<const double>, const MidpointConfig&);       \
  extern template OrbitWitness<S> orbit_witness<S>(const Mat<S>&, const Mat<S>&,               \
                                                   const Mat<S>&);                              \
  extern template Trajectory<S> simulate<S>(const LiePoissonSystem<S>&, const Mat<S>&, long,   \
                                            const MidpointConfig&, const NoiseConfig&,          \
                                            const SimulateOptions<S>&);                         \
  extern template Trajectory<S> simulate<S>(const LiePoissonSystem<S>&, const Mat<S>&,         \
                                            const NormalPath&, const MidpointConfig&,           \
                                            const SimulateOptions<S>&);                         \
  extern template Mat<S> momentum_map<S>(const AlgebraSpec&, const Mat<S>&, const Mat<S>&);    \
  extern template CotangentState<S> act<S>(const Mat<S>&, const CotangentState<S>&);           \
  extern template CotangentStepResult<S> cotangent_step<S>(                                    \
      const LiePoissonSystem<S>&, const CotangentState<S>&, std::span<const double>,           \
      const MidpointConfig&);

ISOMP_DECLARE_INTEGRATOR(double)
ISOMP_DECLARE_INTEGRATOR(Complex)

#undef ISOMP_DECLARE_INTEGRATOR

}  // namespace isomp
