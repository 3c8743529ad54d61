#include "isomp/models.hpp"

#include "isomp/noise.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace isomp {

namespace {

constexpr double kFourPi = 4.0 * std::numbers::pi;

// Separation below which 1 - cos t is treated as a collision.
constexpr double kCollisionTol = 1e-14;

double pair_cos(const ComplexMat& Xi, const ComplexMat& Xj, double ni, double nj) {
  return frobenius_inner<Complex>(Xi, Xj) / (ni * nj);
}

[[noreturn]] void collision(int i, int j) {
  std::ostringstream os;
  os << "point-vortices: vortices " << i << " and " << j << " coincide";
  throw VortexSingularityError(os.str());
}

}  // namespace

PointVortices::PointVortices(std::vector<double> intensities, double alpha, bool noisy)
    : spec_(AlgebraSpec::su2_blocks(static_cast<int>(intensities.size()))),
      gamma_(std::move(intensities)),
      alpha_(alpha),
      noisy_(noisy) {
  if (gamma_.empty()) throw std::invalid_argument("point-vortices: need at least one vortex");
  for (double g : gamma_) {
    if (!std::isfinite(g)) throw std::invalid_argument("point-vortices: intensities must be finite");
  }
  if (!std::isfinite(alpha)) throw std::invalid_argument("point-vortices: alpha must be finite");
}

void PointVortices::require_block_state(const ComplexMat& X) const {
  require_state(X);
  const int n = count();
  double off = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) off += X.block(2 * i, 2 * j, 2, 2).squaredNorm();
    }
  }
  if (std::sqrt(off) > kMembershipTol * std::max(1.0, X.norm())) {
    throw NotInAlgebraError("point-vortices: state is not block diagonal");
  }
  for (int j = 0; j < n; ++j) {
    if (block(X, j).norm() == 0.0) {
      std::ostringstream os;
      os << "point-vortices: block " << j << " is zero";
      throw VortexSingularityError(os.str());
    }
  }
}

ComplexMat PointVortices::embed(std::span<const Vec3> positions) const {
  if (static_cast<int>(positions.size()) != count()) {
    throw SizeMismatchError("point-vortices: position count mismatch");
  }
  ComplexMat X = ComplexMat::Zero(2 * count(), 2 * count());
  for (int j = 0; j < count(); ++j) X.block(2 * j, 2 * j, 2, 2) = su2_embed(positions[j]);
  return X;
}

std::vector<Vec3> PointVortices::positions(const ComplexMat& X) const {
  require_state(X);
  std::vector<Vec3> out;
  for (int j = 0; j < count(); ++j) out.push_back(su2_extract(block(X, j)));
  return out;
}

double PointVortices::hamiltonian(const ComplexMat& X) const {
  require_block_state(X);
  const int n = count();
  std::vector<double> norms(n);
  for (int j = 0; j < n; ++j) norms[j] = block(X, j).norm();
  double h = 0.0;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < j; ++i) {
      const double gap = 1.0 - pair_cos(block(X, i), block(X, j), norms[i], norms[j]);
      if (gap <= kCollisionTol) collision(i, j);
      h += gamma_[i] * gamma_[j] * std::log(gap);
    }
  }
  return -h / kFourPi;
}

ComplexMat PointVortices::grad_h0(const ComplexMat& X) const {
  require_block_state(X);
  const int n = count();
  std::vector<ComplexMat> blocks(n);
  std::vector<double> norms(n);
  for (int j = 0; j < n; ++j) {
    blocks[j] = block(X, j);
    norms[j] = blocks[j].norm();
  }
  ComplexMat G = ComplexMat::Zero(2 * n, 2 * n);
  for (int i = 0; i < n; ++i) {
    ComplexMat gi = ComplexMat::Zero(2, 2);
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double cos_ij = pair_cos(blocks[i], blocks[j], norms[i], norms[j]);
      const double gap = 1.0 - cos_ij;
      if (gap <= kCollisionTol) collision(std::min(i, j), std::max(i, j));
      const double w = gamma_[i] * gamma_[j] / (kFourPi * gap);
      gi += w * (blocks[j] / (norms[i] * norms[j]) - cos_ij * blocks[i] / (norms[i] * norms[i]));
    }
    G.block(2 * i, 2 * i, 2, 2) = gi;
  }
  return G;
}

double PointVortices::noise_hamiltonian(const ComplexMat& X, int k) const {
  require_channel(k);
  double h = 0.0;
  for (const Vec3& x : positions(X)) h += x(k) * x(k);
  return 0.25 * alpha_ * h;
}

ComplexMat PointVortices::grad_hk(const ComplexMat& X, int k) const {
  require_channel(k);
  std::vector<double> w(3, 0.0);
  w[k] = 1.0;
  return noise_field(X, w);
}

ComplexMat PointVortices::noise_field(const ComplexMat& X, std::span<const double> weights) const {
  if (static_cast<int>(weights.size()) != noise_channels()) {
    throw SizeMismatchError("point-vortices: noise_field channel count mismatch");
  }
  require_block_state(X);
  ComplexMat G = ComplexMat::Zero(2 * count(), 2 * count());
  if (!noisy_) return G;
  const Vec3 w(weights[0], weights[1], weights[2]);
  for (int j = 0; j < count(); ++j) {
    const Vec3 x = su2_extract(block(X, j));
    G.block(2 * j, 2 * j, 2, 2) = su2_embed(alpha_ * w.cwiseProduct(x));
  }
  return G;
}

std::vector<ComplexMat> PointVortices::phase_basis() const {
  std::vector<ComplexMat> basis;
  const int n = count();
  for (int j = 0; j < n; ++j) {
    for (int k = 0; k < 3; ++k) {
      ComplexMat E = ComplexMat::Zero(2 * n, 2 * n);
      E.block(2 * j, 2 * j, 2, 2) = std::sqrt(2.0) * su2_embed(Vec3::Unit(k));
      basis.push_back(E);
    }
  }
  return basis;
}

std::vector<double> PointVortices::block_norms(const ComplexMat& X) const {
  std::vector<double> out(count());
  for (int j = 0; j < count(); ++j) out[j] = block(X, j).norm();
  return out;
}

ComplexMat random_vortex_state(const PointVortices& model, std::uint64_t seed) {
  const CounterRng rng = initial_condition_stream(seed);
  std::vector<Vec3> pos;
  std::uint64_t counter = 0;
  for (int j = 0; j < model.count(); ++j) {
    Vec3 v;
    for (int k = 0; k < 3; ++k) v(k) = rng.normal(counter++);
    pos.push_back(v.normalized());
  }
  return model.embed(pos);
}

}  // namespace isomp
