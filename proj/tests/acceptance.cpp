// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance            run every criterion
//   acceptance --only N   run criterion N (AC6 then covers the runs of 1, 2, 4, 5 and 7)

#include "isomp/harness.hpp"
#include "isomp/integrator.hpp"
#include "isomp/models.hpp"
#include "test_support.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

using namespace isomp;
using namespace isomp::testing;

namespace {

/// Largest per-step orbit residual, relative to ||X_n||, over every run so far.
struct OrbitLedger {
  double worst = 0.0;
  long steps = 0;
  std::string where;

  void note(double rel, long n, const std::string& run) {
    steps += n;
    if (rel > worst) {
      worst = rel;
      where = run;
    }
  }
} orbit;

constexpr double kOrbitTol = 1e-11;

struct Line {
  bool pass;
  std::string detail;
};

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

MidpointConfig midpoint(double h) {
  MidpointConfig cfg;
  cfg.h = h;
  cfg.check_orbit = true;
  return cfg;
}

// ---- AC1 ------------------------------------------------------------------

template <typename Scalar>
double eigen_drift_run(const LiePoissonSystem<Scalar>& model, const Mat<Scalar>& X0, long steps) {
  MidpointConfig cfg = midpoint(std::ldexp(1.0, -8));
  SimulateOptions<Scalar> opts;
  opts.record_stride = 0;
  const NoiseConfig nc{model.noise_channels(), cfg.h, cfg.truncation_level, 1};
  const Trajectory<Scalar> traj = simulate<Scalar>(model, X0, steps, cfg, nc, opts);
  orbit.note(traj.max_orbit_residual, steps, "AC1 " + model.name());
  return traj.max_spectral_drift;
}

Line ac1() {
  std::ostringstream os;
  bool pass = true;

  const RigidBody body;
  const double rb = eigen_drift_run<double>(body, RigidBody::default_initial_state(), 250000);
  pass = pass && rb < 1e-10;
  os << "rigid-body " << fmt(rb);

  const Manakov manakov(10);
  const double mk = eigen_drift_run<double>(manakov, random_state<double>(manakov, 1), 100000);
  pass = pass && mk < 1e-10;
  os << ", manakov " << fmt(mk);

  const PointVortices vortices(std::vector<double>(4, 1.0));
  const double pv = eigen_drift_run<Complex>(vortices, random_vortex_state(vortices, 1), 100000);
  pass = pass && pv < 1e-10;
  os << ", vortices " << fmt(pv);

  const ZeitlinEuler zeitlin(12);
  const ComplexMat W0 = random_vorticity(zeitlin, 1);
  MidpointConfig cfg = midpoint(std::ldexp(1.0, -8));
  cfg.track_spectrum = false;
  const DriftTracker<Complex> tracker(zeitlin, W0);
  double enstrophy = 0.0;
  SimulateOptions<Complex> opts;
  opts.record_stride = 0;
  opts.on_step = [&](const TrajectoryPoint<Complex>& p) {
    enstrophy = std::max(enstrophy, std::abs(tracker.observe(p).enstrophy_rel_drift));
  };
  const long steps = 1000;
  const NoiseConfig nc{zeitlin.noise_channels(), cfg.h, cfg.truncation_level, 1};
  const Trajectory<Complex> traj = simulate<Complex>(zeitlin, W0, steps, cfg, nc, opts);
  orbit.note(traj.max_orbit_residual, steps, "AC1 zeitlin");
  pass = pass && enstrophy < 1e-10;
  os << ", zeitlin enstrophy " << fmt(enstrophy) << " (bound 1e-10)";
  return {pass, os.str()};
}

// ---- AC2 ------------------------------------------------------------------

EnsembleConfig strong_config() {
  EnsembleConfig cfg;
  cfg.n_paths = 500;
  cfg.base_seed = 1;
  cfg.T = 0.1;
  cfg.h_ref = std::ldexp(1.0, -13);
  for (int e = 6; e <= 10; ++e) cfg.h_list.push_back(std::ldexp(1.0, -e));
  cfg.check_orbit = true;
  return cfg;
}

template <typename Scalar>
double strong_slope(const LiePoissonSystem<Scalar>& model, const Mat<Scalar>& X0,
                    const std::string& label) {
  const EnsembleConfig cfg = strong_config();
  const ErrorTable table = converge_strong<Scalar>(model, X0, cfg);
  const long steps_per_path = [&] {
    long s = table.summary.grid.ref_steps;
    for (long r : table.summary.grid.ratios) s += table.summary.grid.ref_steps / r;
    return s;
  }();
  orbit.note(table.summary.max_orbit_residual, steps_per_path * table.summary.completed,
             "AC2 " + label);
  return table.fit.slope;
}

Line ac2() {
  std::ostringstream os;
  bool pass = true;
  auto record = [&](const std::string& label, double slope) {
    const bool ok = slope >= 0.35 && slope <= 0.65;
    pass = pass && ok;
    os << (os.tellp() > 0 ? ", " : "") << label << " " << fmt(slope);
  };

  const RigidBody body;
  record("rigid-body", strong_slope<double>(body, RigidBody::default_initial_state(), "rigid-body"));
  const Manakov manakov(6);
  record("manakov", strong_slope<double>(manakov, random_state<double>(manakov, 1), "manakov"));
  const PointVortices vortices(std::vector<double>(4, 1.0));
  record("vortices",
         strong_slope<Complex>(vortices, random_vortex_state(vortices, 1), "point-vortices"));
  const ZeitlinEuler zeitlin(ZeitlinEuler::kDefaultN, ZeitlinEuler::kStrongTestAlpha);
  record("zeitlin", strong_slope<Complex>(zeitlin, random_vorticity(zeitlin, 1), "zeitlin"));
  os << " (slope in [0.35, 0.65])";
  return {pass, os.str()};
}

// ---- AC3 ------------------------------------------------------------------

Line ac3() {
  const RigidBody body;
  EnsembleConfig cfg;
  cfg.n_paths = 200000;
  cfg.base_seed = 1;
  cfg.T = 0.1;
  cfg.h_ref = std::ldexp(1.0, -11);
  for (int e = 5; e <= 8; ++e) cfg.h_list.push_back(std::ldexp(1.0, -e));
  cfg.test_function = "sin-sum";
  cfg.check_orbit = true;
  const ErrorTable table = converge_weak<double>(body, RigidBody::default_initial_state(), cfg);

  long steps_per_path = table.summary.grid.ref_steps;
  for (long r : table.summary.grid.ratios) steps_per_path += table.summary.grid.ref_steps / r;
  orbit.note(table.summary.max_orbit_residual, steps_per_path * table.summary.completed,
             "AC3 rigid-body");

  std::vector<ErrorRow> rows = table.rows;
  std::sort(rows.begin(), rows.end(), [](const ErrorRow& a, const ErrorRow& b) { return a.h > b.h; });
  bool monotone = true;
  std::ostringstream os;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    os << (i ? ", " : "errors ") << fmt(rows[i].error) << "+-" << fmt(rows[i].stderr_);
    if (i > 0) {
      const double se = std::hypot(rows[i].stderr_, rows[i - 1].stderr_);
      monotone = monotone && rows[i].error <= rows[i - 1].error + 2.0 * se;
    }
  }
  const double slope = table.fit.slope;
  os << "; slope " << fmt(slope) << " (in [0.6, 1.4]), monotone within 2 se: "
     << (monotone ? "yes" : "no");
  return {monotone && slope >= 0.6 && slope <= 1.4, os.str()};
}

// ---- AC4 ------------------------------------------------------------------

template <typename Scalar>
std::pair<double, double> oracle_run(const LiePoissonSystem<Scalar>& model, const Mat<Scalar>& X0,
                                     std::uint64_t seed) {
  const MidpointConfig cfg = midpoint(std::ldexp(1.0, -6));
  const NoiseConfig nc{model.noise_channels(), cfg.h, cfg.truncation_level, seed};
  const CounterRng rng = path_stream(seed, 0);
  const long n = X0.rows();
  CotangentState<Scalar> s{Mat<Scalar>::Identity(n, n), X0};
  double worst_mu = 0.0, worst_q = 0.0, worst_orbit = 0.0;
  for (long k = 0; k < 100; ++k) {
    const IncrementBlock b = sample_block(rng, nc, k);
    const Mat<Scalar> mu_n = momentum_map<Scalar>(model.algebra(), s.Q, s.P);
    const StepResult<Scalar> reduced = step<Scalar>(model, mu_n, b.zeta, cfg);
    worst_orbit = std::max(worst_orbit, reduced.record.orbit_residual / mu_n.norm());
    s = cotangent_step<Scalar>(model, s, b.zeta, cfg).state;
    const Mat<Scalar> mu = momentum_map<Scalar>(model.algebra(), s.Q, s.P);
    worst_mu = std::max(worst_mu, (mu - reduced.next).norm());
    worst_q = std::max(worst_q, check_group<Scalar>(model.algebra(), s.Q));
  }
  orbit.note(worst_orbit, 100, "AC4 " + model.name());
  return {worst_mu, worst_q};
}

Line ac4() {
  const RigidBody body;
  const auto [mu_rb, q_rb] = oracle_run<double>(body, RigidBody::default_initial_state(), 4);
  const QuadraticSystem<Complex> quad = random_quadratic_su(3, 3, 0.5, 4);
  const auto [mu_q, q_q] = oracle_run<Complex>(quad, random_state<Complex>(quad, 4), 5);
  std::ostringstream os;
  os << "rigid-body mu " << fmt(mu_rb) << " Q " << fmt(q_rb) << ", su(3) quadratic mu "
     << fmt(mu_q) << " Q " << fmt(q_q) << " (bounds 1e-10)";
  return {std::max({mu_rb, q_rb, mu_q, q_q}) < 1e-10, os.str()};
}

// ---- AC5 ------------------------------------------------------------------

template <typename Scalar>
double equivariance_gap(const LiePoissonSystem<Scalar>& model, const CotangentState<Scalar>& s,
                        const Mat<Scalar>& g, std::span<const double> zeta) {
  const MidpointConfig cfg = midpoint(std::ldexp(1.0, -6));
  const CotangentState<Scalar> a = cotangent_step<Scalar>(model, act<Scalar>(g, s), zeta, cfg).state;
  const CotangentState<Scalar> b = act<Scalar>(g, cotangent_step<Scalar>(model, s, zeta, cfg).state);
  return std::max((a.Q - b.Q).norm(), (a.P - b.P).norm());
}

Line ac5() {
  const RigidBody body;
  const QuadraticSystem<Complex> quad = random_quadratic_su(3, 3, 0.5, 7);
  double worst_rb = 0.0, worst_q = 0.0;
  const CotangentState<double> s_rb{cayley<double>(random_so(3, 0.4)),
                                    RigidBody::default_initial_state() + 0.1 * random_real(3)};
  const CotangentState<Complex> s_q{cayley<Complex>(random_su(3, 0.4)),
                                    random_state<Complex>(quad, 7) + 0.1 * random_complex(3)};
  for (int t = 0; t < 20; ++t) {
    std::vector<double> zeta(3);
    for (double& z : zeta) z = gauss();
    worst_rb = std::max(worst_rb, equivariance_gap<double>(body, s_rb, cayley<double>(random_so(3)), zeta));
    worst_q = std::max(worst_q, equivariance_gap<Complex>(quad, s_q, cayley<Complex>(random_su(3)), zeta));
  }
  std::ostringstream os;
  os << "rigid-body " << fmt(worst_rb) << ", su(3) quadratic " << fmt(worst_q)
     << " over 20 group elements (bound 1e-10)";
  return {std::max(worst_rb, worst_q) < 1e-10, os.str()};
}

// ---- AC7 ------------------------------------------------------------------

template <typename Scalar>
double reversibility(const LiePoissonSystem<Scalar>& model, const Mat<Scalar>& X0, double h) {
  const MidpointConfig cfg = midpoint(h);
  const long n = X0.rows();
  const Mat<Scalar> I = Mat<Scalar>::Identity(n, n);
  Mat<Scalar> Y = X0;
  for (int s = 0; s < 50; ++s) {
    const StepResult<Scalar> r = step<Scalar>(model, Y, {}, cfg);
    orbit.note(r.record.orbit_residual / Y.norm(), 1, "AC7 " + model.name());
    Y = r.next;
  }
  for (int s = 0; s < 50; ++s) {
    const ImplicitSolution<Scalar> back = solve_implicit<Scalar>(model, Y, -cfg.h, {}, cfg);
    Y = (I + 0.5 * back.G) * back.midpoint * (I - 0.5 * back.G);
  }
  return (Y - X0).norm();
}

Line ac7() {
  const RigidBody quiet(Vec3(2.0, 1.0, 2.0 / 3.0), 0.0, false);
  EnsembleConfig cfg;
  cfg.n_paths = 1;
  cfg.T = 1.0;
  cfg.h_ref = std::ldexp(1.0, -12);
  for (int e = 4; e <= 8; ++e) cfg.h_list.push_back(std::ldexp(1.0, -e));
  cfg.check_orbit = true;
  const ErrorTable table = converge_strong<double>(quiet, RigidBody::default_initial_state(), cfg);
  long steps = table.summary.grid.ref_steps;
  for (long r : table.summary.grid.ratios) steps += table.summary.grid.ref_steps / r;
  orbit.note(table.summary.max_orbit_residual, steps, "AC7 self-convergence");
  const double slope = table.fit.slope;

  const double rb = reversibility<double>(quiet, RigidBody::default_initial_state(), 0.05);
  const Manakov manakov(5, 0.0, false);
  const double mk = reversibility<double>(manakov, random_state<double>(manakov, 3), 0.05);
  const ZeitlinEuler zeitlin(6, 0.0, false);
  const double ze = reversibility<Complex>(zeitlin, random_state<Complex>(zeitlin, 3), 0.05);
  const double rev = std::max({rb, mk, ze});
  std::ostringstream os;
  os << "M=0 slope " << fmt(slope) << " (in [1.8, 2.2]), reversibility rigid-body " << fmt(rb)
     << " manakov " << fmt(mk) << " zeitlin " << fmt(ze) << " (bound 1e-12)";
  return {slope >= 1.8 && slope <= 2.2 && rev < 1e-12, os.str()};
}

// ---- AC8 ------------------------------------------------------------------

template <typename Scalar>
double gradient_error(const LiePoissonSystem<Scalar>& model, const Mat<Scalar>& X) {
  double worst = relative_error<Scalar>(
      project<Scalar>(model, model.grad_h0(X)),
      fd_gradient<Scalar>(model, X, [&](const Mat<Scalar>& Y) { return model.hamiltonian(Y); }));
  for (int k = 0; k < model.noise_channels(); ++k) {
    const Mat<Scalar> g = project<Scalar>(model, model.grad_hk(X, k));
    const Mat<Scalar> fd = fd_gradient<Scalar>(
        model, X, [&](const Mat<Scalar>& Y) { return model.noise_hamiltonian(Y, k); });
    // Noise gradients that vanish identically at X are compared in absolute terms.
    worst = std::max(worst, std::max(g.norm(), fd.norm()) < 1e-8 ? (g - fd).norm()
                                                                   : relative_error<Scalar>(g, fd));
  }
  return worst;
}

Line ac8() {
  const RigidBody body;
  const Manakov manakov(6);
  const PointVortices vortices({1.0, -0.5, 2.0, 0.7});
  const ZeitlinEuler zeitlin(8, 0.5);
  const QuadraticSystem<Complex> quad = random_quadratic_su(3, 3, 0.5, 8);
  double rb = 0.0, mk = 0.0, pv = 0.0, ze = 0.0, qd = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    rb = std::max(rb, gradient_error<double>(body, random_state<double>(body, 100 + s)));
    mk = std::max(mk, gradient_error<double>(manakov, random_state<double>(manakov, 100 + s)));
    pv = std::max(pv, gradient_error<Complex>(vortices, random_vortex_state(vortices, 100 + s)));
    ze = std::max(ze, gradient_error<Complex>(zeitlin, random_state<Complex>(zeitlin, 100 + s)));
    qd = std::max(qd, gradient_error<Complex>(quad, random_state<Complex>(quad, 100 + s)));
  }
  std::ostringstream os;
  os << "rigid-body " << fmt(rb) << ", manakov " << fmt(mk) << ", vortices " << fmt(pv)
     << ", zeitlin " << fmt(ze) << ", quadratic " << fmt(qd) << " (bound 1e-6)";
  return {std::max({rb, mk, pv, ze, qd}) < 1e-6, os.str()};
}

// ---- AC9 ------------------------------------------------------------------

/// sum_a [S_a, [S_a, X]] with explicit spin-(N-1)/2 matrices.
struct SpinLaplacian {
  ComplexMat S[3];

  explicit SpinLaplacian(int N) {
    const double s = 0.5 * (N - 1);
    ComplexMat S3 = ComplexMat::Zero(N, N), Sp = ComplexMat::Zero(N, N);
    for (int a = 0; a < N; ++a) S3(a, a) = s - a;
    for (int a = 0; a + 1 < N; ++a) {
      const double m = s - (a + 1);
      Sp(a, a + 1) = std::sqrt(s * (s + 1) - m * (m + 1));
    }
    S[0] = 0.5 * (Sp + Sp.adjoint());
    S[1] = Complex(0, -0.5) * (Sp - Sp.adjoint());
    S[2] = S3;
  }

  ComplexMat operator()(const ComplexMat& X) const {
    ComplexMat out = ComplexMat::Zero(X.rows(), X.cols());
    for (const ComplexMat& s : S) out += commutator<Complex>(s, commutator<Complex>(s, X));
    return out;
  }
};

Line ac9() {
  std::ostringstream os;
  bool pass = true;
  for (int N : {8, 12, 16}) {
    const HoppeBasis basis(N);
    const SpinLaplacian lap(N);
    double eig = 0.0, ortho = 0.0;
    for (std::size_t a = 0; a < basis.size(); ++a) {
      const ComplexMat& E = basis.element(a);
      const int l = basis.degree(a);
      eig = std::max(eig, (lap(E) - l * (l + 1.0) * E).norm());
      for (std::size_t b = a; b < basis.size(); ++b) {
        const Complex ip = (E.adjoint() * basis.element(b)).trace();
        ortho = std::max(ortho, std::abs(ip - (a == b ? 1.0 : 0.0)));
      }
    }
    pass = pass && eig < 1e-10 && ortho < 1e-12;
    os << (N == 8 ? "" : ", ") << "N=" << N << " eig " << fmt(eig) << " ortho " << fmt(ortho);
  }
  os << " (bounds 1e-10, 1e-12)";
  return {pass, os.str()};
}

// ---- AC6 ------------------------------------------------------------------

Line ac6() {
  std::ostringstream os;
  os << "max ||X_{n+1} - g* X_n g*^-1|| / ||X_n|| = " << fmt(orbit.worst) << " over "
     << orbit.steps << " steps";
  if (!orbit.where.empty()) os << " (worst in " << orbit.where << ")";
  os << " (bound 1e-11)";
  return {orbit.steps > 0 && orbit.worst < kOrbitTol, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--only N]\n", argv[0]);
      return 2;
    }
  }
  if (only < 0 || only > 9) {
    std::fprintf(stderr, "criterion must be 1..9\n");
    return 2;
  }

  const std::vector<std::function<Line()>> criteria{ac1, ac2, ac3, ac4, ac5, ac6, ac7, ac8, ac9};
  std::set<int> selected;
  if (only == 0) {
    for (int c = 1; c <= 9; ++c) selected.insert(c);
  } else if (only == 6) {
    selected = {1, 2, 4, 5, 6, 7};
  } else {
    selected = {only};
  }

  bool all = true;
  // AC6 summarizes the orbit residuals of every other run, so it goes last.
  std::vector<int> order(selected.begin(), selected.end());
  std::stable_partition(order.begin(), order.end(), [](int c) { return c != 6; });
  for (int c : order) {
    const auto t0 = std::chrono::steady_clock::now();
    Line line;
    try {
      line = criteria[c - 1]();
    } catch (const std::exception& e) {
      line = {false, std::string("exception: ") + e.what()};
    }
    const bool report = only == 0 || c == only;
    if (report || !line.pass) {
      std::printf("AC%d %s: %s [%.1fs]\n", c, line.pass ? "PASS" : "FAIL", line.detail.c_str(),
                  seconds_since(t0));
      std::fflush(stdout);
    }
    if (report) all = all && line.pass;
  }
  return all ? 0 : 1;
}
