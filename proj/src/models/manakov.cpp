#include "isomp/models.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace isomp {

Manakov::Manakov(int n, double alpha, bool noisy)
    : spec_(AlgebraSpec::so(n)), n_(n), alpha_(alpha), noisy_(noisy) {
  if (n < 3) throw std::invalid_argument("manakov: n must be at least 3");
  if (!std::isfinite(alpha)) throw std::invalid_argument("manakov: alpha must be finite");
  lambda_ = RealMat::Ones(n, n);
  // 0-based i corresponds to row i + 1, so the prefix runs over k = 1..i.
  for (int i = 0; i < n; ++i) {
    double prefix = 0.0;
    for (int k = 1; k <= i; ++k) prefix += n - k;
    for (int j = i + 1; j < n; ++j) {
      lambda_(i, j) = lambda_(j, i) = prefix + (j - i);
      pairs_.emplace_back(i, j);
    }
  }
}

int Manakov::channel(int i, int j) const {
  if (i < 0 || j >= n_ || i >= j) {
    std::ostringstream os;
    os << "manakov: invalid pair (" << i << ", " << j << ")";
    throw std::out_of_range(os.str());
  }
  return static_cast<int>(lambda_(i, j)) - 1;
}

double Manakov::hamiltonian(const RealMat& X) const {
  double h = 0.0;
  for (const auto& [i, j] : pairs_) h += X(i, j) * X(i, j) / lambda_(i, j);
  return h;
}

RealMat Manakov::grad_h0(const RealMat& X) const {
  require_state(X);
  RealMat G = X.cwiseQuotient(lambda_);
  G.diagonal().setZero();
  return G;
}

double Manakov::noise_hamiltonian(const RealMat& X, int k) const {
  require_channel(k);
  const auto [i, j] = pairs_[k];
  return alpha_ * X(i, j) * X(i, j);
}

RealMat Manakov::grad_pair(const RealMat& X, int i, int j) const {
  const int k = channel(i, j);
  return grad_hk(X, k);
}

RealMat Manakov::grad_hk(const RealMat& X, int k) const {
  require_channel(k);
  require_state(X);
  const auto [i, j] = pairs_[k];
  RealMat G = RealMat::Zero(n_, n_);
  G(i, j) = alpha_ * X(i, j);
  G(j, i) = alpha_ * X(j, i);
  return G;
}

RealMat Manakov::noise_field(const RealMat& X, std::span<const double> weights) const {
  if (static_cast<int>(weights.size()) != noise_channels()) {
    throw SizeMismatchError("manakov: noise_field channel count mismatch");
  }
  require_state(X);
  RealMat G = RealMat::Zero(n_, n_);
  if (!noisy_) return G;
  for (std::size_t k = 0; k < pairs_.size(); ++k) {
    const auto [i, j] = pairs_[k];
    const double w = alpha_ * weights[k];
    G(i, j) = w * X(i, j);
    G(j, i) = w * X(j, i);
  }
  return G;
}

}  // namespace isomp
