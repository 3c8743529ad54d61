#include "isomp/system.hpp"

#include <sstream>

namespace isomp {

template <typename Scalar>
Mat<Scalar> LiePoissonSystem<Scalar>::noise_field(const Matrix& X,
                                                  std::span<const double> weights) const {
  if (static_cast<int>(weights.size()) != noise_channels()) {
    throw SizeMismatchError("noise_field: channel count mismatch");
  }
  Matrix sum = Matrix::Zero(X.rows(), X.cols());
  for (int k = 0; k < noise_channels(); ++k) {
    if (weights[k] != 0.0) sum += weights[k] * grad_hk(X, k);
  }
  return sum;
}

template <typename Scalar>
std::vector<double> LiePoissonSystem<Scalar>::block_norms(const Matrix&) const {
  return {};
}

template <typename Scalar>
Casimirs LiePoissonSystem<Scalar>::casimirs(const Matrix& X) const {
  Casimirs c;
  const Matrix X2 = X * X;
  if constexpr (is_complex_v<Scalar>) {
    c.enstrophy = X2.trace().real();
  } else {
    c.enstrophy = X2.trace();
  }
  c.spectrum = spectrum<Scalar>(X);
  c.block_norms = block_norms(X);
  return c;
}

template <typename Scalar>
void LiePoissonSystem<Scalar>::require_channel(int k) const {
  if (k < 0 || k >= noise_channels()) {
    std::ostringstream os;
    os << name() << ": noise channel " << k << " out of range [0, " << noise_channels() << ")";
    throw std::out_of_range(os.str());
  }
}

template <typename Scalar>
void LiePoissonSystem<Scalar>::require_state(const Matrix& X) const {
  const int n = algebra().n;
  if (X.rows() != n || X.cols() != n) {
    std::ostringstream os;
    os << name() << ": expected " << n << "x" << n << " state, got " << X.rows() << "x"
       << X.cols();
    throw SizeMismatchError(os.str());
  }
  require_skew<Scalar>(X, name().c_str());
}

template class LiePoissonSystem<double>;
template class LiePoissonSystem<Complex>;

}  // namespace isomp
