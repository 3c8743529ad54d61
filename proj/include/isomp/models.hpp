#pragma once

#include "isomp/system.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace isomp {

/// Free rigid body on so(3)*: H0(X) = tr((I^-1 X)* X) / 2 with a diagonal inertia
/// acting as hat(x) -> hat(I x). Noise: grad Hi(X) = alpha hat(x_i e_i), i = 1..3.
class RigidBody final : public LiePoissonSystem<double> {
 public:
  static constexpr std::array<double, 3> kDefaultInertia{2.0, 1.0, 2.0 / 3.0};
  static constexpr double kDefaultAlpha = 0.1;

  explicit RigidBody(const Vec3& inertia = Vec3(2.0, 1.0, 2.0 / 3.0),
                     double alpha = kDefaultAlpha, bool noisy = true);

  /// x0 = (sin 1.1, 0, cos 1.1)
  static RealMat default_initial_state();

  std::string name() const override { return "rigid-body"; }
  const AlgebraSpec& algebra() const override { return spec_; }
  int noise_channels() const override { return noisy_ ? 3 : 0; }

  double hamiltonian(const RealMat& X) const override;
  RealMat grad_h0(const RealMat& X) const override;
  double noise_hamiltonian(const RealMat& X, int k) const override;
  RealMat grad_hk(const RealMat& X, int k) const override;
  RealMat noise_field(const RealMat& X, std::span<const double> weights) const override;
  std::vector<RealMat> phase_basis() const override;

  const Vec3& inertia() const { return inertia_; }
  double alpha() const { return alpha_; }

 private:
  AlgebraSpec spec_;
  Vec3 inertia_;
  double alpha_;
  bool noisy_;
};

/// Generalised rigid body on so(n)*. The inertia scales the upper-triangle entry
/// (i, j), i < j (1-based), by Lambda_ij = sum_{k < i} (n - k) + (j - i), which is
/// the row-major position of (i, j) in the strict upper triangle. One noise channel
/// per pair: grad H_ij(X) = alpha X restricted to {(i, j), (j, i)}.
class Manakov final : public LiePoissonSystem<double> {
 public:
  static constexpr double kDefaultAlpha = 0.1;

  explicit Manakov(int n, double alpha = kDefaultAlpha, bool noisy = true);

  std::string name() const override { return "manakov"; }
  const AlgebraSpec& algebra() const override { return spec_; }
  int noise_channels() const override { return noisy_ ? static_cast<int>(pairs_.size()) : 0; }

  double hamiltonian(const RealMat& X) const override;
  RealMat grad_h0(const RealMat& X) const override;
  double noise_hamiltonian(const RealMat& X, int k) const override;
  RealMat grad_hk(const RealMat& X, int k) const override;
  RealMat noise_field(const RealMat& X, std::span<const double> weights) const override;
  std::vector<RealMat> phase_basis() const override { return so_basis(n_); }

  /// Lambda_ij for 0-based i < j.
  double inertia(int i, int j) const { return lambda_(i, j); }
  /// Channel index of the 0-based pair (i, j), i < j.
  int channel(int i, int j) const;
  RealMat grad_pair(const RealMat& X, int i, int j) const;
  int size() const { return n_; }
  double alpha() const { return alpha_; }

 private:
  AlgebraSpec spec_;
  int n_;
  double alpha_;
  bool noisy_;
  RealMat lambda_;
  std::vector<std::pair<int, int>> pairs_;
};

/// Point vortices on the sphere. The state is block-diagonal in su(2)^n, block j
/// being su2_embed(x_j) with x_j the vortex position. With cos t_ij the normalised
/// pairing <X_i, X_j> / (|X_i| |X_j|),
///   H0 = -1/(4 pi) sum_{i<j} G_i G_j log(1 - cos t_ij).
/// Noise channel k = 1..3 acts on coordinate k of every vortex:
///   block j of grad Hk = alpha su2_embed(x_kj e_k).
class PointVortices final : public LiePoissonSystem<Complex> {
 public:
  static constexpr double kDefaultAlpha = 0.1;

  explicit PointVortices(std::vector<double> intensities, double alpha = kDefaultAlpha,
                         bool noisy = true);

  std::string name() const override { return "point-vortices"; }
  const AlgebraSpec& algebra() const override { return spec_; }
  int noise_channels() const override { return noisy_ ? 3 : 0; }

  double hamiltonian(const ComplexMat& X) const override;
  ComplexMat grad_h0(const ComplexMat& X) const override;
  double noise_hamiltonian(const ComplexMat& X, int k) const override;
  ComplexMat grad_hk(const ComplexMat& X, int k) const override;
  ComplexMat noise_field(const ComplexMat& X, std::span<const double> weights) const override;
  std::vector<ComplexMat> phase_basis() const override;
  std::vector<double> block_norms(const ComplexMat& X) const override;

  int count() const { return static_cast<int>(gamma_.size()); }
  const std::vector<double>& intensities() const { return gamma_; }
  double alpha() const { return alpha_; }

  ComplexMat embed(std::span<const Vec3> positions) const;
  std::vector<Vec3> positions(const ComplexMat& X) const;

 private:
  ComplexMat block(const ComplexMat& X, int j) const { return X.block(2 * j, 2 * j, 2, 2); }
  void require_block_state(const ComplexMat& X) const;

  AlgebraSpec spec_;
  std::vector<double> gamma_;
  double alpha_;
  bool noisy_;
};

class VortexSingularityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Real orthonormal eigenbasis of the Hoppe Laplacian on su(N): quantised spherical
/// harmonics E_lm, l = 1..N-1, m = -l..l, with Delta_N E_lm = l(l+1) E_lm.
///
/// Delta_N X = sum_a [S_a, [S_a, X]] for the spin-(N-1)/2 generators S_a. It maps
/// the m-th matrix diagonal (entries (r, r+m)) to itself, where it acts as a real
/// symmetric tridiagonal matrix T_|m|. For m > 0 an eigenvector v of T_m placed on
/// the diagonal gives Y; then E_{l,m} = (Y - Y^T)/sqrt 2 and E_{l,-m} = i (Y + Y^T)/sqrt 2.
/// For m = 0, E_{l,0} = i diag(v). Signs make the leading entry of v positive.
class HoppeBasis {
 public:
  explicit HoppeBasis(int N);

  int N() const { return N_; }
  std::size_t size() const { return elements_.size(); }
  const ComplexMat& element(std::size_t k) const { return elements_[k]; }
  int degree(std::size_t k) const { return degree_[k]; }
  int order(std::size_t k) const { return order_[k]; }
  /// Index of E_lm, l = 1..N-1, |m| <= l.
  std::size_t index(int l, int m) const;

  ComplexMat laplacian(const ComplexMat& X) const;
  /// Solves Delta_N Y = X on the traceless subspace. Throws on a trace component.
  ComplexMat laplacian_inv(const ComplexMat& X) const;

  /// Coefficients c_k = <E_k, X> for every basis element.
  std::vector<double> coefficients(const ComplexMat& X) const;
  /// sum_k c_k E_k
  ComplexMat synthesize(std::span<const double> c) const;

  /// Binary cache: magic, N, then the per-diagonal eigenvectors.
  void save(const std::filesystem::path& file) const;
  static HoppeBasis load(const std::filesystem::path& file);

 private:
  HoppeBasis() = default;
  void build_elements();
  // Tridiagonal coefficients of T_m: diag(m)[r] and off(m)[r] couples r, r+1.
  std::vector<double> diag_coeff(int m) const;
  std::vector<double> off_coeff(int m) const;

  int N_ = 0;
  double spin_ = 0.0;
  std::vector<double> raise_;  // S+_{r, r+1}
  // vectors_[m] columns: eigenvectors of T_m for l = m..N-1 (m = 0 drops l = 0).
  std::vector<RealMat> vectors_;
  std::vector<ComplexMat> elements_;
  std::vector<int> degree_;
  std::vector<int> order_;
};

/// Zeitlin-Euler equations on su(N)*: H0(X) = tr((Delta_N^-1 X)* X) / 2. Noise
/// channels run over the band l = ceil(N/2)..N-1, all m, with
///   H_lm(X) = alpha / (2 l (l+1)) <E_lm, X>^2,  grad H_lm = alpha/(l(l+1)) <E_lm, X> E_lm.
class ZeitlinEuler final : public LiePoissonSystem<Complex> {
 public:
  static constexpr double kDefaultAlpha = 0.1;
  static constexpr double kStrongTestAlpha = 2.0;
  static constexpr int kDefaultN = 12;

  explicit ZeitlinEuler(int N, double alpha = kDefaultAlpha, bool noisy = true);
  ZeitlinEuler(HoppeBasis basis, double alpha, bool noisy);

  std::string name() const override { return "zeitlin"; }
  const AlgebraSpec& algebra() const override { return spec_; }
  int noise_channels() const override { return noisy_ ? static_cast<int>(channels_.size()) : 0; }

  double hamiltonian(const ComplexMat& X) const override;
  ComplexMat grad_h0(const ComplexMat& X) const override;
  double noise_hamiltonian(const ComplexMat& X, int k) const override;
  ComplexMat grad_hk(const ComplexMat& X, int k) const override;
  ComplexMat noise_field(const ComplexMat& X, std::span<const double> weights) const override;
  std::vector<ComplexMat> phase_basis() const override;

  /// grad H_lm, throwing std::out_of_range outside the noise band.
  ComplexMat grad_lm(const ComplexMat& X, int l, int m) const;

  const HoppeBasis& basis() const { return basis_; }
  int band_min() const { return band_min_; }
  double alpha() const { return alpha_; }

 private:
  void init();

  HoppeBasis basis_;
  AlgebraSpec spec_;
  double alpha_;
  bool noisy_;
  int band_min_ = 0;
  std::vector<std::size_t> channels_;  // basis indices of the noise band
};

/// Quadratic Hamiltonians in coordinates c_a = <E_a, X> over an orthonormal basis:
///   H0 = c^T A c / 2,  Hk = c^T B_k c / 2,  grad = sum_a (A c)_a E_a.
template <typename Scalar>
class QuadraticSystem final : public LiePoissonSystem<Scalar> {
 public:
  using Matrix = Mat<Scalar>;

  QuadraticSystem(AlgebraSpec spec, std::vector<Matrix> basis, RealMat drift,
                  std::vector<RealMat> noise, std::string name = "quadratic");

  std::string name() const override { return name_; }
  const AlgebraSpec& algebra() const override { return spec_; }
  int noise_channels() const override { return static_cast<int>(noise_.size()); }

  double hamiltonian(const Matrix& X) const override;
  Matrix grad_h0(const Matrix& X) const override;
  double noise_hamiltonian(const Matrix& X, int k) const override;
  Matrix grad_hk(const Matrix& X, int k) const override;
  std::vector<Matrix> phase_basis() const override { return basis_; }

  Eigen::VectorXd coordinates(const Matrix& X) const;
  Matrix synthesize(const Eigen::VectorXd& c) const;

 private:
  AlgebraSpec spec_;
  std::vector<Matrix> basis_;
  RealMat drift_;
  std::vector<RealMat> noise_;
  std::string name_;
};

/// Random quadratic model on su(N): drift operator SPD with spectrum in [1, 3],
/// `channels` noise operators alpha * W W^T / D with W Gaussian, all from `seed`.
QuadraticSystem<Complex> random_quadratic_su(int N, int channels, double alpha,
                                             std::uint64_t seed);

extern template class QuadraticSystem<double>;
extern template class QuadraticSystem<Complex>;

/// Random phase-space element sum_a c_a E_a, c_a i.i.d. standard normal from the
/// initial-condition stream of `seed`, scaled to Frobenius norm `norm`.
template <typename Scalar>
Mat<Scalar> random_state(const LiePoissonSystem<Scalar>& model, std::uint64_t seed,
                         double norm = 1.0);

/// Vortex positions drawn uniformly on the unit sphere.
ComplexMat random_vortex_state(const PointVortices& model, std::uint64_t seed);

/// Unit-variance coefficients on every quantized harmonic, rescaled to ||X||_F = sqrt(N^2 - 1).
ComplexMat random_vorticity(const ZeitlinEuler& model, std::uint64_t seed);

extern template RealMat random_state<double>(const LiePoissonSystem<double>&, std::uint64_t,
                                             double);
extern template ComplexMat random_state<Complex>(const LiePoissonSystem<Complex>&,
                                                 std::uint64_t, double);

}  // namespace isomp
