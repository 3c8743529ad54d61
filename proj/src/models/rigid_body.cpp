#include "isomp/models.hpp"

#include <cmath>
#include <stdexcept>

namespace isomp {

RigidBody::RigidBody(const Vec3& inertia, double alpha, bool noisy)
    : spec_(AlgebraSpec::so(3)), inertia_(inertia), alpha_(alpha), noisy_(noisy) {
  if (!(inertia.minCoeff() > 0.0) || !inertia.allFinite()) {
    throw std::invalid_argument("rigid-body: inertia entries must be positive");
  }
  if (!std::isfinite(alpha)) throw std::invalid_argument("rigid-body: alpha must be finite");
}

RealMat RigidBody::default_initial_state() {
  return hat(Vec3(std::sin(1.1), 0.0, std::cos(1.1)));
}

double RigidBody::hamiltonian(const RealMat& X) const {
  const Vec3 x = unhat(X);
  return x.dot(x.cwiseQuotient(inertia_));
}

RealMat RigidBody::grad_h0(const RealMat& X) const {
  require_state(X);
  return hat(unhat(X).cwiseQuotient(inertia_));
}

double RigidBody::noise_hamiltonian(const RealMat& X, int k) const {
  require_channel(k);
  const double xk = unhat(X)(k);
  return alpha_ * xk * xk;
}

RealMat RigidBody::grad_hk(const RealMat& X, int k) const {
  require_channel(k);
  require_state(X);
  Vec3 v = Vec3::Zero();
  v(k) = alpha_ * unhat(X)(k);
  return hat(v);
}

RealMat RigidBody::noise_field(const RealMat& X, std::span<const double> weights) const {
  if (static_cast<int>(weights.size()) != noise_channels()) {
    throw SizeMismatchError("rigid-body: noise_field channel count mismatch");
  }
  require_state(X);
  if (!noisy_) return RealMat::Zero(3, 3);
  const Vec3 x = unhat(X);
  return hat(alpha_ * Vec3(weights[0] * x(0), weights[1] * x(1), weights[2] * x(2)));
}

std::vector<RealMat> RigidBody::phase_basis() const {
  std::vector<RealMat> basis;
  for (int k = 0; k < 3; ++k) basis.push_back(hat(Vec3::Unit(k)) / std::sqrt(2.0));
  return basis;
}

}  // namespace isomp
