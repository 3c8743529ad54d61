#pragma once

// Matrix Lie algebra primitives for J-quadratic algebras g = { A : A* J + J A = 0 }
// and their groups G = { Q : Q* J Q = J }. The algebra is identified with its dual
// through the real Frobenius pairing <X, V> = Re tr(X* V).

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace isomp {

using Complex = std::complex<double>;

template <typename Scalar>
using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using RealMat = Mat<double>;
using ComplexMat = Mat<Complex>;
using Vec3 = Eigen::Vector3d;

template <typename Scalar>
inline constexpr bool is_complex_v = !std::is_same_v<Scalar, double>;

/// Frobenius residual accepted for algebra/group membership.
inline constexpr double kMembershipTol = 1e-12;

class SizeMismatchError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NotInAlgebraError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class SingularFactorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Field { real, complex };

std::string to_string(Field f);

struct AlgebraSpec {
  int n = 0;
  Field field = Field::real;
  ComplexMat J;
  double c = 1.0;
  std::string name;

  /// so(n): real skew-symmetric matrices, J = I.
  static AlgebraSpec so(int n);
  /// su(n): traceless skew-Hermitian matrices, J = I.
  static AlgebraSpec su(int n);
  /// Block-diagonal su(2) + ... + su(2) embedded in 2k x 2k matrices, J = I.
  static AlgebraSpec su2_blocks(int blocks);

  /// Throws std::invalid_argument unless J* = +-J and J^2 = cI within tol.
  void validate(double tol = 1e-14) const;
};

/// J cast to the model's scalar type (imaginary part dropped for real algebras).
template <typename Scalar>
Mat<Scalar> structure_matrix(const AlgebraSpec& spec);

template <typename Scalar>
Mat<Scalar> commutator(const Mat<Scalar>& A, const Mat<Scalar>& B);

template <typename Scalar>
double frobenius_inner(const Mat<Scalar>& X, const Mat<Scalar>& V);

template <typename Scalar>
double frobenius_norm(const Mat<Scalar>& X) {
  return X.norm();
}

/// ||A* J + J A||_F
template <typename Scalar>
double check_algebra(const AlgebraSpec& spec, const Mat<Scalar>& A);

/// ||Q* J Q - J||_F
template <typename Scalar>
double check_group(const AlgebraSpec& spec, const Mat<Scalar>& Q);

/// ||A + A*||_F, the J = I specialisation used on hot paths.
template <typename Scalar>
double skew_residual(const Mat<Scalar>& A) {
  return (A + A.adjoint()).norm();
}

/// Throws NotInAlgebraError when A is not skew-Hermitian to kMembershipTol * max(1, ||A||).
template <typename Scalar>
void require_skew(const Mat<Scalar>& A, const char* what);

/// cay(A) = (I - A)^-1 (I + A)
template <typename Scalar>
Mat<Scalar> cayley(const Mat<Scalar>& A);

/// cay^-1(A) = (I + A)^-1 (I - A)
template <typename Scalar>
Mat<Scalar> cayley_inv(const Mat<Scalar>& A);

RealMat hat(const Vec3& v);
Vec3 unhat(const RealMat& A);

/// su2_embed(v) = -(i/2)(v1 s1 + v2 s2 + v3 s3) with Pauli matrices s_k.
/// tr(su2_embed(x)* su2_embed(y)) = x.y / 2.
ComplexMat su2_embed(const Vec3& v);
Vec3 su2_extract(const ComplexMat& A);

/// Eigenvalues sorted lexicographically by (Re, Im). Real parts below
/// 64 eps ||A|| are snapped to zero so that purely imaginary spectra sort by
/// imaginary part alone. Skew-Hermitian input goes through a Hermitian solver.
template <typename Scalar>
std::vector<Complex> spectrum(const Mat<Scalar>& A);

/// max_k |a_k - b_k| over two sorted spectra of equal length.
double spectral_distance(const std::vector<Complex>& a, const std::vector<Complex>& b);

/// Orthonormal basis of so(n) in the Frobenius pairing.
std::vector<RealMat> so_basis(int n);
/// Orthonormal basis of su(n) in the real Frobenius pairing.
std::vector<ComplexMat> su_basis(int n);

/// max_ij |A_ij|
template <typename Scalar>
double max_abs(const Mat<Scalar>& A) {
  return A.size() == 0 ? 0.0 : A.cwiseAbs().maxCoeff();
}

}  // namespace isomp
