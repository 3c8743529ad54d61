#include "isomp/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace isomp {

namespace {

constexpr double kSingularRcond = 1e-13;

template <typename Scalar>
Eigen::PartialPivLU<Mat<Scalar>> factor(const Mat<Scalar>& A, const char* what) {
  Eigen::PartialPivLU<Mat<Scalar>> lu(A);
  if (!(lu.rcond() > kSingularRcond)) {
    throw SingularFactorError(std::string(what) + ": (I +- G/2) is numerically singular");
  }
  return lu;
}

// Z = Y A^-1 through the transposed system A^T Z^T = Y^T.
template <typename Scalar>
Mat<Scalar> right_solve(const Mat<Scalar>& A, const Mat<Scalar>& Y, const char* what) {
  const auto lu = factor<Scalar>(Mat<Scalar>(A.transpose()), what);
  return lu.solve(Mat<Scalar>(Y.transpose())).transpose();
}

double scaled_tol(const MidpointConfig& cfg, double state_inf) {
  return cfg.fp_tol * std::max(1.0, state_inf);
}

// Shared fixed-point driver: `iterate` maps the current iterate to the next one
// and returns the infinity norm of the update.
template <typename Iterate>
StepRecord fixed_point(const MidpointConfig& cfg, double tol, const char* what, Iterate&& iterate) {
  StepRecord rec;
  double previous = std::numeric_limits<double>::infinity();
  int growth = 0;
  for (int it = 1; it <= cfg.max_iters; ++it) {
    const double update = iterate();
    rec.iterations = it;
    rec.fp_residual = update;
    if (!std::isfinite(update)) {
      throw NonConvergenceError(std::string(what) + ": fixed-point iterate is not finite", it,
                                update);
    }
    if (update <= tol) return rec;
    growth = update > previous ? growth + 1 : 0;
    if (growth >= cfg.divergence_window) {
      std::ostringstream os;
      os << what << ": fixed-point iteration diverging after " << it << " iterations (update "
         << update << ")";
      throw NonConvergenceError(os.str(), it, update);
    }
    previous = update;
  }
  std::ostringstream os;
  os << what << ": no convergence in " << cfg.max_iters << " iterations (last update "
     << rec.fp_residual << ", tolerance " << tol << ")";
  throw NonConvergenceError(os.str(), rec.iterations, rec.fp_residual);
}

template <typename Scalar>
StepResult<Scalar> step_impl(const LiePoissonSystem<Scalar>& model, const Mat<Scalar>& X_n,
                             std::span<const double> zeta, const MidpointConfig& cfg,
                             const std::vector<Complex>* spec_n, std::vector<Complex>* spec_next) {
  ImplicitSolution<Scalar> sol = solve_implicit(model, X_n, cfg.h, zeta, cfg);
  const Eigen::Index n = X_n.rows();
  const Mat<Scalar> I = Mat<Scalar>::Identity(n, n);
  StepResult<Scalar> out;
  const Mat<Scalar> Y = (I + 0.5 * sol.G) * sol.midpoint * (I - 0.5 * sol.G);
  // Drop the roundoff component outside g: A = -J A* J / c holds exactly on g.
  const Mat<Scalar> J = structure_matrix<Scalar>(model.algebra());
  out.next = 0.5 * (Y - J * Y.adjoint() * J / model.algebra().c);
  out.record = sol.record;
  if (cfg.track_spectrum) {
    std::vector<Complex> before = spec_n ? *spec_n : spectrum<Scalar>(X_n);
    std::vector<Complex> after = spectrum<Scalar>(out.next);
    out.record.spectral_drift = spectral_distance(before, after);
    if (spec_next) *spec_next = std::move(after);
  }
  if (cfg.check_orbit) {
    out.record.orbit_residual = orbit_witness<Scalar>(X_n, sol.midpoint, sol.G).residual;
  }
  out.midpoint = std::move(sol.midpoint);
  out.G = std::move(sol.G);
  return out;
}

}  // namespace

void MidpointConfig::validate() const {
  if (!(h > 0.0)) throw std::invalid_argument("MidpointConfig: h must be positive");
  if (!(fp_tol > 0.0)) throw std::invalid_argument("MidpointConfig: fp_tol must be positive");
  if (max_iters < 1) throw std::invalid_argument("MidpointConfig: max_iters must be >= 1");
  if (truncation_level < 1) throw std::invalid_argument("MidpointConfig: truncation level must be >= 1");
  if (divergence_window < 1) throw std::invalid_argument("MidpointConfig: divergence window must be >= 1");
}

template <typename Scalar>
Mat<Scalar> psi_tilde(const LiePoissonSystem<Scalar>& model, const Mat<Scalar>& X, double h,
                      std::span<const double> zeta) {
  const int M = model.noise_channels();
  if (static_cast<int>(zeta.size()) != M) {
    std::ostringstream os;
    os << "psi_tilde: " << model.name() << " has " << M << " noise channels, got "
       << zeta.size() << " increments";
    throw SizeMismatchError(os.str());
  }
  Mat<Scalar> B = h * model.grad_h0(X);
  if (M > 0) {
    const double sqrt_h = std::sqrt(h);
    std::vector<double> w(zeta.begin(), zeta.end());
    for (double& v : w) v *= sqrt_h;
    B += model.noise_field(X, w);
  }
  return B.adjoint();
}

template <typename Scalar>
ImplicitSolution<Scalar> solve_implicit(const LiePoissonSystem<Scalar>& model,
                                        const Mat<Scalar>& X_n, double h,
                                        std::span<const double> zeta, const MidpointConfig& cfg) {
  const Eigen::Index n = X_n.rows();
  const Mat<Scalar> I = Mat<Scalar>::Identity(n, n);
  ImplicitSolution<Scalar> sol;
  sol.midpoint = X_n;
  const double tol = scaled_tol(cfg, max_abs(X_n));

  sol.record = fixed_point(cfg, tol, "solve_implicit", [&] {
    const Mat<Scalar> G = psi_tilde(model, sol.midpoint, h, zeta);
    const auto minus = factor<Scalar>(I - 0.5 * G, "solve_implicit");
    Mat<Scalar> next =
        right_solve<Scalar>(I + 0.5 * G, Mat<Scalar>(minus.solve(X_n)), "solve_implicit");
    const double update = max_abs<Scalar>(next - sol.midpoint);
    sol.midpoint = std::move(next);
    return update;
  });

  sol.G = psi_tilde(model, sol.midpoint, h, zeta);
  sol.record.relation_residual =
      max_abs<Scalar>(X_n - (I - 0.5 * sol.G) * sol.midpoint * (I + 0.5 * sol.G));
  return sol;
}

template <typename Scalar>
StepResult<Scalar> step(const LiePoissonSystem<Scalar>& model, const Mat<Scalar>& X_n,
                        std::span<const double> zeta, const MidpointConfig& cfg) {
  return step_impl(model, X_n, zeta, cfg, nullptr, nullptr);
}

template <typename Scalar>
OrbitWitness<Scalar> orbit_witness(const Mat<Scalar>& X_n, const Mat<Scalar>& midpoint,
                                   const Mat<Scalar>& G) {
  const Eigen::Index n = X_n.rows();
  const Mat<Scalar> I = Mat<Scalar>::Identity(n, n);
  const Mat<Scalar> A = -0.5 * G;
  const Mat<Scalar> g_star = cayley_inv<Scalar>(A);
  const Mat<Scalar> g_star_inv = cayley<Scalar>(A);
  const Mat<Scalar> next = (I + 0.5 * G) * midpoint * (I - 0.5 * G);
  OrbitWitness<Scalar> w;
  w.g = g_star.adjoint();
  w.residual = (next - g_star * X_n * g_star_inv).norm();
  return w;
}

template <typename Scalar, typename ZetaAt>
Trajectory<Scalar> run_steps(const LiePoissonSystem<Scalar>& model, const Mat<Scalar>& X0,
                             long steps, const MidpointConfig& cfg,
                             const SimulateOptions<Scalar>& options, ZetaAt&& zeta_at) {
  Trajectory<Scalar> traj;
  traj.steps = steps;

  std::vector<Complex> spec0;
  std::vector<Complex> spec_prev;
  if (cfg.track_spectrum) {
    spec0 = spectrum<Scalar>(X0);
    spec_prev = spec0;
  }

  TrajectoryPoint<Scalar> point{0, 0.0, X0, {}};
  if (options.on_step) options.on_step(point);
  if (options.record_stride > 0) traj.points.push_back(point);

  Mat<Scalar> X = X0;
  std::vector<double> zeta;
  for (long s = 0; s < steps; ++s) {
    StepResult<Scalar> res;
    std::vector<Complex> spec_next;
    try {
      zeta_at(s, zeta);
      res = step_impl(model, X, zeta, cfg, cfg.track_spectrum ? &spec_prev : nullptr,
                      &spec_next);
    } catch (const std::exception& e) {
      std::ostringstream os;
      os << "step " << s << ": " << e.what();
      throw StepFailure(os.str(), s);
    }
    if (cfg.check_orbit) {
      const double scale = X.norm();
      const double rel = scale > 0.0 ? res.record.orbit_residual / scale : res.record.orbit_residual;
      traj.max_orbit_residual = std::max(traj.max_orbit_residual, rel);
    }
    X = std::move(res.next);
    traj.max_iterations = std::max(traj.max_iterations, res.record.iterations);
    if (cfg.track_spectrum) {
      traj.max_spectral_drift = std::max(traj.max_spectral_drift, spectral_distance(spec0, spec_next));
      spec_prev = std::move(spec_next);
    }
    const long index = s + 1;
    const bool keep = options.record_stride > 0 && index % options.record_stride == 0;
    if (options.on_step || keep) {
      point = TrajectoryPoint<Scalar>{index, static_cast<double>(index) * cfg.h, X, res.record};
      if (options.on_step) options.on_step(point);
      if (keep) traj.points.push_back(point);
    }
  }
  traj.final_state = std::move(X);
  return traj;
}

template <typename Scalar>
Trajectory<Scalar> simulate(const LiePoissonSystem<Scalar>& model, const Mat<Scalar>& X0,
                            long steps, const MidpointConfig& cfg, const NoiseConfig& noise,
                            const SimulateOptions<Scalar>& options) {
  cfg.validate();
  if (steps < 0) throw std::invalid_argument("simulate: negative step count");
  if (noise.channels != model.noise_channels()) {
    throw SizeMismatchError("simulate: noise channel count does not match the model");
  }
  noise.validate();
  if (noise.h != cfg.h || noise.truncation_level != cfg.truncation_level) {
    throw std::invalid_argument("simulate: noise and integrator step configurations disagree");
  }
  const CounterRng rng = path_stream(noise.seed, options.path_index);
  return run_steps(model, X0, steps, cfg, options, [&](long s, std::vector<double>& zeta) {
    zeta = sample_block(rng, noise, s).zeta;
  });
}

template <typename Scalar>
Trajectory<Scalar> simulate(const LiePoissonSystem<Scalar>& model, const Mat<Scalar>& X0,
                            const NormalPath& normals, const MidpointConfig& cfg,
                            const SimulateOptions<Scalar>& options) {
  cfg.validate();
  if (normals.channels != model.noise_channels()) {
    throw SizeMismatchError("simulate: normal path channel count does not match the model");
  }
  if (normals.xi.size() != static_cast<std::size_t>(normals.steps) * normals.channels) {
    throw SizeMismatchError("simulate: malformed normal path");
  }
  const double A = truncation_threshold(cfg.h, cfg.truncation_level);
  return run_steps(model, X0, normals.steps, cfg, options,
                   [&](long s, std::vector<double>& zeta) {
                     const auto xi = normals.at(s);
                     zeta.resize(xi.size());
                     for (std::size_t k = 0; k < xi.size(); ++k) zeta[k] = truncate(xi[k], A);
                   });
}

template <typename Scalar>
Mat<Scalar> momentum_map(const AlgebraSpec& spec, const Mat<Scalar>& Q, const Mat<Scalar>& P) {
  if (Q.rows() != spec.n || Q.cols() != spec.n || P.rows() != spec.n || P.cols() != spec.n) {
    throw SizeMismatchError("momentum_map: Q and P must be n x n");
  }
  const Mat<Scalar> J = structure_matrix<Scalar>(spec);
  return 0.5 * Q.adjoint() * P - (0.5 / spec.c) * J * P.adjoint() * Q * J;
}

template <typename Scalar>
CotangentState<Scalar> act(const Mat<Scalar>& g, const CotangentState<Scalar>& state) {
  Eigen::PartialPivLU<Mat<Scalar>> lu(g);
  const Mat<Scalar> g_inv_star = lu.inverse().adjoint();
  return {g * state.Q, g_inv_star * state.P};
}

template <typename Scalar>
CotangentStepResult<Scalar> cotangent_step(const LiePoissonSystem<Scalar>& model,
                                          const CotangentState<Scalar>& state,
                                          std::span<const double> zeta,
                                          const MidpointConfig& cfg) {
  const AlgebraSpec& spec = model.algebra();
  const Eigen::Index n = state.Q.rows();
  const Mat<Scalar> I = Mat<Scalar>::Identity(n, n);
  const double h = cfg.h;

  // B = grad H0(mu) h + sum_k grad Hk(mu) zeta_k sqrt(h) = psi_tilde(mu)*.
  auto increment = [&](const Mat<Scalar>& Q, const Mat<Scalar>& P) -> Mat<Scalar> {
    return psi_tilde(model, momentum_map(spec, Q, P), h, zeta).adjoint();
  };

  Mat<Scalar> Q_mid = state.Q;
  Mat<Scalar> P_mid = state.P;
  const double tol = scaled_tol(cfg, std::max(max_abs(state.Q), max_abs(state.P)));

  CotangentStepResult<Scalar> out;
  out.record = fixed_point(cfg, tol, "cotangent_step", [&] {
    const Mat<Scalar> B = increment(Q_mid, P_mid);
    Mat<Scalar> Q_next = right_solve<Scalar>(I - 0.5 * B, state.Q, "cotangent_step");
    Mat<Scalar> P_next = right_solve<Scalar>(I + 0.5 * B.adjoint(), state.P, "cotangent_step");
    const double update =
        std::max(max_abs<Scalar>(Q_next - Q_mid), max_abs<Scalar>(P_next - P_mid));
    Q_mid = std::move(Q_next);
    P_mid = std::move(P_next);
    return update;
  });

  const Mat<Scalar> B = increment(Q_mid, P_mid);
  out.record.relation_residual =
      std::max(max_abs<Scalar>(state.Q - Q_mid * (I - 0.5 * B)),
               max_abs<Scalar>(state.P - P_mid * (I + 0.5 * B.adjoint())));
  out.state.Q = Q_mid * (I + 0.5 * B);
  out.state.P = P_mid * (I - 0.5 * B.adjoint());
  return out;
}

#define ISOMP_INSTANTIATE(S)                                                                    \
  template Mat<S> psi_tilde<S>(const LiePoissonSystem<S>&, const Mat<S>&, double,              \
                               std::span<const double>);                                       \
  template ImplicitSolution<S> solve_implicit<S>(const LiePoissonSystem<S>&, const Mat<S>&,    \
                                                 double, std::span<const double>,              \
                                                 const MidpointConfig&);                        \
  template StepResult<S> step<S>(const LiePoissonSystem<S>&, const Mat<S>&,                    \
                                 std::span<const double>, const MidpointConfig&);              \
  template OrbitWitness<S> orbit_witness<S>(const Mat<S>&, const Mat<S>&, const Mat<S>&);      \
  template Trajectory<S> simulate<S>(const LiePoissonSystem<S>&, const Mat<S>&, long,          \
                                     const MidpointConfig&, const NoiseConfig&,                 \
                                     const SimulateOptions<S>&);                                \
  template Trajectory<S> simulate<S>(const LiePoissonSystem<S>&, const Mat<S>&,                \
                                     const NormalPath&, const MidpointConfig&,                  \
                                     const SimulateOptions<S>&);                                \
  template Mat<S> momentum_map<S>(const AlgebraSpec&, const Mat<S>&, const Mat<S>&);           \
  template CotangentState<S> act<S>(const Mat<S>&, const CotangentState<S>&);                  \
  template CotangentStepResult<S> cotangent_step<S>(const LiePoissonSystem<S>&,                \
                                                    const CotangentState<S>&,                   \
                                                    std::span<const double>,                    \
                                                    const MidpointConfig&);

ISOMP_INSTANTIATE(double)
ISOMP_INSTANTIATE(Complex)

#undef ISOMP_INSTANTIATE

}  // namespace isomp
