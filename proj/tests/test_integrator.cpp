#include "isomp/integrator.hpp"

#include "isomp/models.hpp"
#include "test_support.hpp"

#include <doctest.h>

#include <cmath>

using namespace isomp;
using namespace isomp::testing;

namespace {

MidpointConfig config(double h) {
  MidpointConfig cfg;
  cfg.h = h;
  return cfg;
}

}  // namespace

TEST_CASE("config validation") {
  CHECK_THROWS_AS(config(0.0).validate(), std::invalid_argument);
  MidpointConfig c = config(0.1);
  c.fp_tol = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = config(0.1);
  c.max_iters = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  CHECK_NOTHROW(config(0.1).validate());
}

TEST_CASE("psi_tilde assembles drift and noise") {
  const RigidBody body;
  const RealMat X = RigidBody::default_initial_state();
  const double h = 0.01;
  const std::vector<double> zeta{0.3, -1.2, 2.0};
  const RealMat G = psi_tilde<double>(body, X, h, zeta);
  RealMat expected = h * body.grad_h0(X).transpose();
  for (int k = 0; k < 3; ++k) expected += zeta[k] * std::sqrt(h) * body.grad_hk(X, k).transpose();
  CHECK((G - expected).norm() < 1e-15);
  CHECK(check_algebra<double>(body.algebra(), G) < 1e-10);
  CHECK_THROWS_AS(psi_tilde<double>(body, X, h, std::vector<double>{1.0}), SizeMismatchError);

  const RigidBody quiet(Vec3(2, 1, 2.0 / 3.0), 0.1, false);
  CHECK((psi_tilde<double>(quiet, X, h, {}) - h * quiet.grad_h0(X).transpose()).norm() == 0.0);
}

TEST_CASE("zero Hamiltonian steps are the identity") {
  const ZeroSystem zero(4, 2);
  const RealMat X = random_so(4);
  const StepResult<double> r = step<double>(zero, X, std::vector<double>{1.0, -1.0}, config(0.1));
  CHECK((r.next - X).norm() == 0.0);
  CHECK(r.record.iterations == 1);
}

TEST_CASE("one rigid-body step satisfies the scheme") {
  const RigidBody body;
  const RealMat X = RigidBody::default_initial_state();
  MidpointConfig cfg = config(std::ldexp(1.0, -4));
  const std::vector<double> zeta{1.1, -0.4, 0.8};
  const StepResult<double> r = step<double>(body, X, zeta, cfg);
  const RealMat I = RealMat::Identity(3, 3);
  CHECK(r.record.fp_residual <= cfg.fp_tol * std::max(1.0, max_abs<double>(X)));
  CHECK(r.record.relation_residual < 1e-14);
  CHECK((r.G - psi_tilde<double>(body, r.midpoint, cfg.h, zeta)).norm() < 1e-15);
  CHECK((X - (I - 0.5 * r.G) * r.midpoint * (I + 0.5 * r.G)).norm() < 1e-14);
  CHECK(r.record.spectral_drift < 1e-14);
  CHECK(unhat(r.next).norm() == doctest::Approx(unhat(X).norm()).epsilon(1e-14));

  const OrbitWitness<double> w = orbit_witness<double>(X, r.midpoint, r.G);
  CHECK(w.residual < 1e-11 * X.norm());
  CHECK(check_group<double>(body.algebra(), w.g) < 1e-13);
  CHECK((w.g.transpose() * X * w.g.transpose().inverse() - r.next).norm() < 1e-13);
}

TEST_CASE("isospectral steps on su(N)") {
  const ZeitlinEuler model(6, 0.5);
  const ComplexMat X = random_state<Complex>(model, 3);
  std::vector<double> zeta(model.noise_channels());
  for (double& z : zeta) z = gauss();
  MidpointConfig cfg = config(0.01);
  cfg.check_orbit = true;
  const StepResult<Complex> r = step<Complex>(model, X, zeta, cfg);
  CHECK(r.record.spectral_drift < 1e-13);
  CHECK(r.record.orbit_residual < 1e-11 * X.norm());
  CHECK(check_algebra<Complex>(model.algebra(), r.next) < 1e-13);
  CHECK(std::abs(r.next.trace()) < 1e-13);
}

TEST_CASE("deterministic midpoint is time reversible") {
  const RigidBody body(Vec3(2, 1, 2.0 / 3.0), 0.1, false);
  const RealMat X = RigidBody::default_initial_state();
  const MidpointConfig cfg = config(0.05);
  const RealMat I = RealMat::Identity(3, 3);
  RealMat Y = X;
  for (int s = 0; s < 20; ++s) Y = step<double>(body, Y, {}, cfg).next;
  for (int s = 0; s < 20; ++s) {
    const ImplicitSolution<double> back = solve_implicit<double>(body, Y, -cfg.h, {}, cfg);
    Y = (I + 0.5 * back.G) * back.midpoint * (I - 0.5 * back.G);
  }
  CHECK((Y - X).norm() < 1e-12);
}

TEST_CASE("fixed-point failures are reported") {
  const RigidBody body;
  const RealMat X = RigidBody::default_initial_state();
  MidpointConfig cfg = config(0.1);
  cfg.max_iters = 1;
  try {
    step<double>(body, X, std::vector<double>{0.0, 0.0, 0.0}, cfg);
    FAIL("expected NonConvergenceError");
  } catch (const NonConvergenceError& e) {
    CHECK(e.iterations() == 1);
    CHECK(e.last_residual() > 0.0);
  }
  NoiseConfig nc{3, cfg.h, cfg.truncation_level, 1};
  try {
    simulate<double>(body, X, 5, cfg, nc);
    FAIL("expected StepFailure");
  } catch (const StepFailure& e) {
    CHECK(e.step() == 0);
  }

  // Huge steps on a stiff quadratic model do not converge.
  const RigidBody stiff(Vec3(1e-3, 1.0, 2.0), 0.0, false);
  const RealMat Z = hat(Vec3(1.0, 1.0, 1.0) * 10.0);
  CHECK_THROWS(step<double>(stiff, Z, {}, config(10.0)));
}

TEST_CASE("simulate is deterministic and records drift") {
  const RigidBody body;
  const RealMat X = RigidBody::default_initial_state();
  MidpointConfig cfg = config(std::ldexp(1.0, -6));
  cfg.check_orbit = true;
  NoiseConfig nc{3, cfg.h, cfg.truncation_level, 5};
  SimulateOptions<double> opts;
  opts.path_index = 2;
  opts.record_stride = 10;
  long observed = 0;
  opts.on_step = [&](const TrajectoryPoint<double>&) { ++observed; };
  const Trajectory<double> a = simulate<double>(body, X, 100, cfg, nc, opts);
  opts.on_step = nullptr;
  const Trajectory<double> b = simulate<double>(body, X, 100, cfg, nc, opts);
  CHECK(observed == 101);
  CHECK(a.points.size() == 11);
  CHECK(a.points.back().step == 100);
  CHECK(a.points.back().t == doctest::Approx(100 * cfg.h));
  CHECK((a.final_state - b.final_state).norm() == 0.0);
  CHECK(a.max_spectral_drift < 1e-13);
  CHECK(a.max_orbit_residual < 1e-11);
  CHECK(a.max_iterations >= 2);

  opts.path_index = 3;
  const Trajectory<double> c = simulate<double>(body, X, 100, cfg, nc, opts);
  CHECK((a.final_state - c.final_state).norm() > 0.0);

  NoiseConfig wrong = nc;
  wrong.h = 2 * cfg.h;
  CHECK_THROWS_AS(simulate<double>(body, X, 1, cfg, wrong), std::invalid_argument);
  wrong = nc;
  wrong.channels = 2;
  CHECK_THROWS_AS(simulate<double>(body, X, 1, cfg, wrong), SizeMismatchError);
}

TEST_CASE("simulate from a normal path matches the sampled stream") {
  const RigidBody body;
  const RealMat X = RigidBody::default_initial_state();
  const MidpointConfig cfg = config(std::ldexp(1.0, -5));
  const NoiseConfig nc{3, cfg.h, cfg.truncation_level, 9};
  SimulateOptions<double> opts;
  opts.path_index = 4;
  const Trajectory<double> a = simulate<double>(body, X, 32, cfg, nc, opts);
  const NormalPath path = sample_path(path_stream(9, 4), 3, 32);
  const Trajectory<double> b = simulate<double>(body, X, path, cfg, opts);
  CHECK((a.final_state - b.final_state).norm() == 0.0);
  CHECK(b.steps == 32);
}

TEST_CASE("momentum map and group action") {
  const AlgebraSpec so3 = AlgebraSpec::so(3);
  const RealMat X = random_so(3);
  CHECK((momentum_map<double>(so3, RealMat::Identity(3, 3), X) - X).norm() < 1e-15);
  const RealMat Q = cayley<double>(random_so(3, 0.5));
  const RealMat P = random_real(3);
  const RealMat mu = momentum_map<double>(so3, Q, P);
  CHECK(check_algebra<double>(so3, mu) < 1e-14);
  // mu(gQ, g^-* P) = mu(Q, P): the momentum map of the left action is invariant.
  const RealMat g = cayley<double>(random_so(3, 0.7));
  const CotangentState<double> moved = act<double>(g, {Q, P});
  CHECK((momentum_map<double>(so3, moved.Q, moved.P) - mu).norm() < 1e-13);
  CHECK_THROWS_AS(momentum_map<double>(so3, RealMat::Identity(2, 2), X), SizeMismatchError);
}

TEST_CASE("cotangent step reduces to the isospectral step") {
  const RigidBody body;
  const RealMat X0 = RigidBody::default_initial_state();
  const MidpointConfig cfg = config(std::ldexp(1.0, -5));
  const NoiseConfig nc{3, cfg.h, cfg.truncation_level, 17};
  const CounterRng rng = path_stream(nc.seed, 0);
  CotangentState<double> s{RealMat::Identity(3, 3), X0};
  for (long n = 0; n < 20; ++n) {
    const IncrementBlock b = sample_block(rng, nc, n);
    const RealMat mu_n = momentum_map<double>(body.algebra(), s.Q, s.P);
    const RealMat reduced = step<double>(body, mu_n, b.zeta, cfg).next;
    s = cotangent_step<double>(body, s, b.zeta, cfg).state;
    CHECK((momentum_map<double>(body.algebra(), s.Q, s.P) - reduced).norm() < 1e-12);
    CHECK(check_group<double>(body.algebra(), s.Q) < 1e-12);
  }
}
