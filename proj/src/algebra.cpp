#include "isomp/algebra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace isomp {

namespace {

constexpr double kSingularRcond = 1e-13;

template <typename Scalar>
void require_same_size(const Mat<Scalar>& A, const Mat<Scalar>& B, const char* op) {
  if (A.rows() != B.rows() || A.cols() != B.cols()) {
    std::ostringstream os;
    os << op << ": size mismatch " << A.rows() << "x" << A.cols() << " vs " << B.rows() << "x"
       << B.cols();
    throw SizeMismatchError(os.str());
  }
}

template <typename Scalar>
void require_square(const Mat<Scalar>& A, const char* op) {
  if (A.rows() != A.cols()) {
    throw SizeMismatchError(std::string(op) + ": matrix is not square");
  }
}

template <typename Scalar>
Mat<Scalar> solve_checked(const Mat<Scalar>& lhs, const Mat<Scalar>& rhs, const char* op) {
  Eigen::PartialPivLU<Mat<Scalar>> lu(lhs);
  if (!(lu.rcond() > kSingularRcond)) {
    throw SingularFactorError(std::string(op) + ": factor is numerically singular");
  }
  return lu.solve(rhs);
}

}  // namespace

std::string to_string(Field f) { return f == Field::real ? "real" : "complex"; }

AlgebraSpec AlgebraSpec::so(int n) {
  if (n < 1) throw std::invalid_argument("so(n): n must be positive");
  return {n, Field::real, ComplexMat::Identity(n, n), 1.0, "so(" + std::to_string(n) + ")"};
}

AlgebraSpec AlgebraSpec::su(int n) {
  if (n < 1) throw std::invalid_argument("su(n): n must be positive");
  return {n, Field::complex, ComplexMat::Identity(n, n), 1.0, "su(" + std::to_string(n) + ")"};
}

AlgebraSpec AlgebraSpec::su2_blocks(int blocks) {
  if (blocks < 1) throw std::invalid_argument("su(2) blocks: count must be positive");
  const int n = 2 * blocks;
  return {n, Field::complex, ComplexMat::Identity(n, n), 1.0,
          "su(2)^" + std::to_string(blocks)};
}

void AlgebraSpec::validate(double tol) const {
  if (n < 1 || J.rows() != n || J.cols() != n) {
    throw std::invalid_argument("AlgebraSpec: J must be n x n");
  }
  if (c == 0.0) throw std::invalid_argument("AlgebraSpec: c must be nonzero");
  const double herm = (J.adjoint() - J).cwiseAbs().maxCoeff();
  const double antiherm = (J.adjoint() + J).cwiseAbs().maxCoeff();
  if (std::min(herm, antiherm) > tol) {
    throw std::invalid_argument("AlgebraSpec: J* must equal +J or -J");
  }
  const ComplexMat sq = J * J - Complex(c) * ComplexMat::Identity(n, n);
  if (sq.cwiseAbs().maxCoeff() > tol) {
    throw std::invalid_argument("AlgebraSpec: J^2 must equal cI");
  }
}

template <typename Scalar>
Mat<Scalar> structure_matrix(const AlgebraSpec& spec) {
  if constexpr (is_complex_v<Scalar>) {
    return spec.J;
  } else {
    return spec.J.real();
  }
}

template <typename Scalar>
Mat<Scalar> commutator(const Mat<Scalar>& A, const Mat<Scalar>& B) {
  require_same_size(A, B, "commutator");
  require_square(A, "commutator");
  return A * B - B * A;
}

template <typename Scalar>
double frobenius_inner(const Mat<Scalar>& X, const Mat<Scalar>& V) {
  require_same_size(X, V, "frobenius_inner");
  if constexpr (is_complex_v<Scalar>) {
    return (X.conjugate().cwiseProduct(V)).sum().real();
  } else {
    return X.cwiseProduct(V).sum();
  }
}

template <typename Scalar>
double check_algebra(const AlgebraSpec& spec, const Mat<Scalar>& A) {
  if (A.rows() != spec.n || A.cols() != spec.n) {
    throw SizeMismatchError("check_algebra: matrix does not match algebra size");
  }
  const Mat<Scalar> J = structure_matrix<Scalar>(spec);
  return (A.adjoint() * J + J * A).norm();
}

template <typename Scalar>
double check_group(const AlgebraSpec& spec, const Mat<Scalar>& Q) {
  if (Q.rows() != spec.n || Q.cols() != spec.n) {
    throw SizeMismatchError("check_group: matrix does not match algebra size");
  }
  const Mat<Scalar> J = structure_matrix<Scalar>(spec);
  return (Q.adjoint() * J * Q - J).norm();
}

template <typename Scalar>
void require_skew(const Mat<Scalar>& A, const char* what) {
  require_square(A, what);
  const double res = skew_residual(A);
  if (res > kMembershipTol * std::max(1.0, A.norm())) {
    std::ostringstream os;
    os << what << ": input is not skew-Hermitian (residual " << res << ")";
    throw NotInAlgebraError(os.str());
  }
}

template <typename Scalar>
Mat<Scalar> cayley(const Mat<Scalar>& A) {
  require_square(A, "cayley");
  const Mat<Scalar> I = Mat<Scalar>::Identity(A.rows(), A.cols());
  return solve_checked<Scalar>(I - A, I + A, "cayley");
}

template <typename Scalar>
Mat<Scalar> cayley_inv(const Mat<Scalar>& A) {
  require_square(A, "cayley_inv");
  const Mat<Scalar> I = Mat<Scalar>::Identity(A.rows(), A.cols());
  return solve_checked<Scalar>(I + A, I - A, "cayley_inv");
}

RealMat hat(const Vec3& v) {
  RealMat A(3, 3);
  A << 0.0, -v(2), v(1),
       v(2), 0.0, -v(0),
       -v(1), v(0), 0.0;
  return A;
}

Vec3 unhat(const RealMat& A) {
  if (A.rows() != 3 || A.cols() != 3) throw SizeMismatchError("unhat: expected 3x3 matrix");
  require_skew(A, "unhat");
  // Average the two mirrored entries so roundoff asymmetry does not bias the result.
  return Vec3(0.5 * (A(2, 1) - A(1, 2)), 0.5 * (A(0, 2) - A(2, 0)), 0.5 * (A(1, 0) - A(0, 1)));
}

ComplexMat su2_embed(const Vec3& v) {
  const Complex i(0.0, 1.0);
  ComplexMat S(2, 2);
  // v . sigma = [[v3, v1 - i v2], [v1 + i v2, -v3]]
  S << Complex(v(2)), Complex(v(0), -v(1)),
       Complex(v(0), v(1)), Complex(-v(2));
  return -0.5 * i * S;
}

Vec3 su2_extract(const ComplexMat& A) {
  if (A.rows() != 2 || A.cols() != 2) throw SizeMismatchError("su2_extract: expected 2x2 matrix");
  require_skew(A, "su2_extract");
  if (std::abs(A.trace()) > kMembershipTol * std::max(1.0, A.norm())) {
    throw NotInAlgebraError("su2_extract: input is not traceless");
  }
  Vec3 v;
  for (int k = 0; k < 3; ++k) {
    Vec3 e = Vec3::Zero();
    e(k) = 1.0;
    v(k) = 2.0 * frobenius_inner<Complex>(su2_embed(e), A);
  }
  return v;
}

template <typename Scalar>
std::vector<Complex> spectrum(const Mat<Scalar>& A) {
  require_square(A, "spectrum");
  const Eigen::Index n = A.rows();
  std::vector<Complex> ev;
  ev.reserve(static_cast<std::size_t>(n));
  if (n == 0) return ev;

  const double scale = std::max(1.0, A.norm());
  const ComplexMat Ac = A.template cast<Complex>();
  if (skew_residual(A) <= kMembershipTol * scale) {
    // A = i H with H = -i A Hermitian.
    const ComplexMat H = Complex(0.0, -0.5) * (Ac - Ac.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMat> es(H, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw std::runtime_error("spectrum: eigensolver failed");
    for (Eigen::Index k = 0; k < n; ++k) ev.emplace_back(0.0, es.eigenvalues()(k));
  } else {
    Eigen::ComplexEigenSolver<ComplexMat> es(Ac, false);
    if (es.info() != Eigen::Success) throw std::runtime_error("spectrum: eigensolver failed");
    const double snap = 64.0 * std::numeric_limits<double>::epsilon() * scale;
    for (Eigen::Index k = 0; k < n; ++k) {
      Complex z = es.eigenvalues()(k);
      if (std::abs(z.real()) <= snap) z.real(0.0);
      if (std::abs(z.imag()) <= snap) z.imag(0.0);
      ev.push_back(z);
    }
  }
  std::sort(ev.begin(), ev.end(), [](const Complex& a, const Complex& b) {
    if (a.real() != b.real()) return a.real() < b.real();
    return a.imag() < b.imag();
  });
  return ev;
}

double spectral_distance(const std::vector<Complex>& a, const std::vector<Complex>& b) {
  if (a.size() != b.size()) throw SizeMismatchError("spectral_distance: length mismatch");
  double d = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a[k] - b[k]));
  return d;
}

std::vector<RealMat> so_basis(int n) {
  std::vector<RealMat> basis;
  const double s = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      RealMat E = RealMat::Zero(n, n);
      E(i, j) = -s;
      E(j, i) = s;
      basis.push_back(std::move(E));
    }
  }
  return basis;
}

std::vector<ComplexMat> su_basis(int n) {
  std::vector<ComplexMat> basis;
  const double s = 1.0 / std::sqrt(2.0);
  const Complex i(0.0, 1.0);
  for (int a = 0; a < n; ++a) {
    for (int b = a + 1; b < n; ++b) {
      ComplexMat E = ComplexMat::Zero(n, n);
      E(a, b) = -s;
      E(b, a) = s;
      basis.push_back(E);
      E(a, b) = i * s;
      E(b, a) = i * s;
      basis.push_back(std::move(E));
    }
  }
  // Generalised Gell-Mann diagonals, scaled by i.
  for (int k = 1; k < n; ++k) {
    ComplexMat E = ComplexMat::Zero(n, n);
    const double norm = 1.0 / std::sqrt(static_cast<double>(k) * (k + 1));
    for (int a = 0; a < k; ++a) E(a, a) = i * norm;
    E(k, k) = -static_cast<double>(k) * i * norm;
    basis.push_back(std::move(E));
  }
  return basis;
}

#define ISOMP_INSTANTIATE(S)                                                     \
  template Mat<S> structure_matrix<S>(const AlgebraSpec&);                       \
  template Mat<S> commutator<S>(const Mat<S>&, const Mat<S>&);                   \
  template double frobenius_inner<S>(const Mat<S>&, const Mat<S>&);              \
  template double check_algebra<S>(const AlgebraSpec&, const Mat<S>&);           \
  template double check_group<S>(const AlgebraSpec&, const Mat<S>&);             \
  template void require_skew<S>(const Mat<S>&, const char*);                     \
  template Mat<S> cayley<S>(const Mat<S>&);                                      \
  template Mat<S> cayley_inv<S>(const Mat<S>&);                                  \
  template std::vector<Complex> spectrum<S>(const Mat<S>&);

ISOMP_INSTANTIATE(double)
ISOMP_INSTANTIATE(Complex)

#undef ISOMP_INSTANTIATE

}  // namespace isomp
