#include "isomp/models.hpp"

#include "isomp/noise.hpp"

#include <Eigen/QR>

#include <stdexcept>

namespace isomp {

template <typename Scalar>
QuadraticSystem<Scalar>::QuadraticSystem(AlgebraSpec spec, std::vector<Matrix> basis,
                                         RealMat drift, std::vector<RealMat> noise,
                                         std::string name)
    : spec_(std::move(spec)),
      basis_(std::move(basis)),
      drift_(std::move(drift)),
      noise_(std::move(noise)),
      name_(std::move(name)) {
  const auto D = static_cast<Eigen::Index>(basis_.size());
  if (D == 0) throw std::invalid_argument("quadratic: empty basis");
  auto square_sym = [D](const RealMat& A) {
    return A.rows() == D && A.cols() == D && (A - A.transpose()).norm() <= 1e-12 * (1.0 + A.norm());
  };
  if (!square_sym(drift_)) throw std::invalid_argument("quadratic: drift must be symmetric DxD");
  for (const RealMat& B : noise_) {
    if (!square_sym(B)) throw std::invalid_argument("quadratic: noise must be symmetric DxD");
  }
}

template <typename Scalar>
Eigen::VectorXd QuadraticSystem<Scalar>::coordinates(const Matrix& X) const {
  Eigen::VectorXd c(basis_.size());
  for (std::size_t a = 0; a < basis_.size(); ++a) c(a) = frobenius_inner<Scalar>(basis_[a], X);
  return c;
}

template <typename Scalar>
Mat<Scalar> QuadraticSystem<Scalar>::synthesize(const Eigen::VectorXd& c) const {
  Matrix X = Matrix::Zero(spec_.n, spec_.n);
  for (std::size_t a = 0; a < basis_.size(); ++a) X += c(a) * basis_[a];
  return X;
}

template <typename Scalar>
double QuadraticSystem<Scalar>::hamiltonian(const Matrix& X) const {
  const Eigen::VectorXd c = coordinates(X);
  return 0.5 * c.dot(drift_ * c);
}

template <typename Scalar>
Mat<Scalar> QuadraticSystem<Scalar>::grad_h0(const Matrix& X) const {
  this->require_state(X);
  return synthesize(drift_ * coordinates(X));
}

template <typename Scalar>
double QuadraticSystem<Scalar>::noise_hamiltonian(const Matrix& X, int k) const {
  this->require_channel(k);
  const Eigen::VectorXd c = coordinates(X);
  return 0.5 * c.dot(noise_[k] * c);
}

template <typename Scalar>
Mat<Scalar> QuadraticSystem<Scalar>::grad_hk(const Matrix& X, int k) const {
  this->require_channel(k);
  this->require_state(X);
  return synthesize(noise_[k] * coordinates(X));
}

template class QuadraticSystem<double>;
template class QuadraticSystem<Complex>;

QuadraticSystem<Complex> random_quadratic_su(int N, int channels, double alpha,
                                             std::uint64_t seed) {
  if (channels < 0) throw std::invalid_argument("quadratic: negative channel count");
  std::vector<ComplexMat> basis = su_basis(N);
  const auto D = static_cast<Eigen::Index>(basis.size());
  const CounterRng rng = initial_condition_stream(seed ^ 0x51ad5eedULL);
  std::uint64_t counter = 0;
  auto gaussian = [&](Eigen::Index rows, Eigen::Index cols) {
    RealMat W(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) W(i, j) = rng.normal(counter++);
    }
    return W;
  };
  const RealMat Q = Eigen::HouseholderQR<RealMat>(gaussian(D, D)).householderQ();
  Eigen::VectorXd lambda(D);
  for (Eigen::Index a = 0; a < D; ++a) lambda(a) = 1.0 + 2.0 * rng.uniform(counter++);
  RealMat A = Q * lambda.asDiagonal() * Q.transpose();
  A = 0.5 * (A + A.transpose()).eval();
  std::vector<RealMat> noise;
  for (int k = 0; k < channels; ++k) {
    const RealMat W = gaussian(D, D);
    RealMat B = alpha * W * W.transpose() / static_cast<double>(D);
    B = 0.5 * (B + B.transpose()).eval();
    noise.push_back(std::move(B));
  }
  return QuadraticSystem<Complex>(AlgebraSpec::su(N), std::move(basis), std::move(A),
                                  std::move(noise), "quadratic-su" + std::to_string(N));
}

template <typename Scalar>
Mat<Scalar> random_state(const LiePoissonSystem<Scalar>& model, std::uint64_t seed, double norm) {
  const std::vector<Mat<Scalar>> basis = model.phase_basis();
  const CounterRng rng = initial_condition_stream(seed);
  const int n = model.algebra().n;
  Mat<Scalar> X = Mat<Scalar>::Zero(n, n);
  for (std::size_t a = 0; a < basis.size(); ++a) X += rng.normal(a) * basis[a];
  const double len = X.norm();
  if (len == 0.0) throw std::runtime_error("random_state: degenerate draw");
  return (norm / len) * X;
}

template RealMat random_state<double>(const LiePoissonSystem<double>&, std::uint64_t, double);
template ComplexMat random_state<Complex>(const LiePoissonSystem<Complex>&, std::uint64_t,
                                          double);

}  // namespace isomp
