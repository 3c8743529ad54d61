#include "isomp/models.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace isomp {

namespace {

constexpr char kCacheMagic[8] = {'I', 'S', 'O', 'M', 'P', 'H', 'B', '1'};

// Solves the symmetric tridiagonal system (d, e) w = u by the Thomas algorithm.
Eigen::VectorXcd thomas(const std::vector<double>& d, const std::vector<double>& e,
                        const Eigen::VectorXcd& u) {
  const int L = static_cast<int>(d.size());
  std::vector<double> cp(L);
  Eigen::VectorXcd dp(L);
  double denom = d[0];
  if (denom == 0.0) throw SingularFactorError("laplacian_inv: zero pivot");
  cp[0] = L > 1 ? e[0] / denom : 0.0;
  dp(0) = u(0) / denom;
  for (int r = 1; r < L; ++r) {
    denom = d[r] - e[r - 1] * cp[r - 1];
    if (denom == 0.0) throw SingularFactorError("laplacian_inv: zero pivot");
    cp[r] = r + 1 < L ? e[r] / denom : 0.0;
    dp(r) = (u(r) - e[r - 1] * dp(r - 1)) / denom;
  }
  Eigen::VectorXcd w(L);
  w(L - 1) = dp(L - 1);
  for (int r = L - 2; r >= 0; --r) w(r) = dp(r) - cp[r] * w(r + 1);
  return w;
}

Eigen::VectorXcd upper_diagonal(const ComplexMat& X, int m) {
  const int L = static_cast<int>(X.rows()) - m;
  Eigen::VectorXcd u(L);
  for (int r = 0; r < L; ++r) u(r) = X(r, r + m);
  return u;
}

Eigen::VectorXcd lower_diagonal(const ComplexMat& X, int m) {
  const int L = static_cast<int>(X.rows()) - m;
  Eigen::VectorXcd u(L);
  for (int r = 0; r < L; ++r) u(r) = X(r + m, r);
  return u;
}

}  // namespace

HoppeBasis::HoppeBasis(int N) : N_(N) {
  if (N < 2) throw std::invalid_argument("zeitlin: N must be at least 2");
  spin_ = 0.5 * (N - 1);
  raise_.resize(N - 1);
  const double s1 = spin_ * (spin_ + 1.0);
  for (int r = 0; r + 1 < N; ++r) {
    const double m_next = spin_ - (r + 1);
    raise_[r] = std::sqrt(s1 - m_next * (m_next + 1.0));
  }
  vectors_.resize(N);
  for (int m = 0; m < N; ++m) {
    const int L = N - m;
    const auto d = diag_coeff(m);
    const auto e = off_coeff(m);
    RealMat T = RealMat::Zero(L, L);
    for (int r = 0; r < L; ++r) T(r, r) = d[r];
    for (int r = 0; r + 1 < L; ++r) T(r, r + 1) = T(r + 1, r) = e[r];
    Eigen::SelfAdjointEigenSolver<RealMat> eig(T);
    if (eig.info() != Eigen::Success) throw std::runtime_error("zeitlin: eigensolver failed");
    const int first = m == 0 ? 1 : 0;
    RealMat V(L, L - first);
    for (int j = first; j < L; ++j) {
      const int l = m + j;
      const double expected = l * (l + 1.0);
      if (std::abs(eig.eigenvalues()(j) - expected) > 1e-9 * std::max(1.0, s1)) {
        std::ostringstream os;
        os << "zeitlin: eigenvalue " << eig.eigenvalues()(j) << " of diagonal " << m
           << " does not match l(l+1) = " << expected;
        throw std::runtime_error(os.str());
      }
      Eigen::VectorXd v = eig.eigenvectors().col(j);
      for (int r = 0; r < L; ++r) {
        if (std::abs(v(r)) > 1e-10) {
          if (v(r) < 0.0) v = -v;
          break;
        }
      }
      V.col(j - first) = v;
    }
    vectors_[m] = std::move(V);
  }
  build_elements();
}

std::vector<double> HoppeBasis::diag_coeff(int m) const {
  const int L = N_ - m;
  const double s1 = spin_ * (spin_ + 1.0);
  std::vector<double> d(L);
  for (int r = 0; r < L; ++r) {
    const double ma = spin_ - r;
    const double mb = spin_ - (r + m);
    d[r] = 2.0 * s1 - 2.0 * ma * mb;
  }
  return d;
}

std::vector<double> HoppeBasis::off_coeff(int m) const {
  const int L = N_ - m;
  std::vector<double> e(L > 1 ? L - 1 : 0);
  for (int r = 0; r + 1 < L; ++r) e[r] = -raise_[r] * raise_[r + m];
  return e;
}

std::size_t HoppeBasis::index(int l, int m) const {
  if (l < 1 || l >= N_ || m < -l || m > l) {
    std::ostringstream os;
    os << "zeitlin: no basis element (l, m) = (" << l << ", " << m << ") for N = " << N_;
    throw std::out_of_range(os.str());
  }
  return static_cast<std::size_t>(l * l - 1 + (m + l));
}

void HoppeBasis::build_elements() {
  const std::size_t dim = static_cast<std::size_t>(N_) * N_ - 1;
  elements_.assign(dim, ComplexMat());
  degree_.assign(dim, 0);
  order_.assign(dim, 0);
  const Complex I(0.0, 1.0);
  const double r2 = std::sqrt(2.0);
  for (int l = 1; l < N_; ++l) {
    for (int m = -l; m <= l; ++m) {
      const int mm = std::abs(m);
      const Eigen::VectorXd v = vectors_[mm].col(mm == 0 ? l - 1 : l - mm);
      ComplexMat E = ComplexMat::Zero(N_, N_);
      for (int r = 0; r < N_ - mm; ++r) {
        if (m == 0) {
          E(r, r) = I * v(r);
        } else if (m > 0) {
          E(r, r + mm) = v(r) / r2;
          E(r + mm, r) = -v(r) / r2;
        } else {
          E(r, r + mm) = I * v(r) / r2;
          E(r + mm, r) = I * v(r) / r2;
        }
      }
      const std::size_t k = index(l, m);
      elements_[k] = std::move(E);
      degree_[k] = l;
      order_[k] = m;
    }
  }
}

ComplexMat HoppeBasis::laplacian(const ComplexMat& X) const {
  if (X.rows() != N_ || X.cols() != N_) throw SizeMismatchError("zeitlin: laplacian size mismatch");
  const double s1 = spin_ * (spin_ + 1.0);
  ComplexMat Y(N_, N_);
  for (int a = 0; a < N_; ++a) {
    for (int b = 0; b < N_; ++b) {
      const double ma = spin_ - a;
      const double mb = spin_ - b;
      Complex y = (2.0 * s1 - 2.0 * ma * mb) * X(a, b);
      if (a + 1 < N_ && b + 1 < N_) y -= raise_[a] * raise_[b] * X(a + 1, b + 1);
      if (a > 0 && b > 0) y -= raise_[a - 1] * raise_[b - 1] * X(a - 1, b - 1);
      Y(a, b) = y;
    }
  }
  return Y;
}

ComplexMat HoppeBasis::laplacian_inv(const ComplexMat& X) const {
  if (X.rows() != N_ || X.cols() != N_) {
    throw SizeMismatchError("zeitlin: laplacian_inv size mismatch");
  }
  if (std::abs(X.trace()) > kMembershipTol * std::max(1.0, X.norm())) {
    throw NotInAlgebraError("zeitlin: laplacian_inv needs a traceless argument");
  }
  ComplexMat Y = ComplexMat::Zero(N_, N_);
  {
    const RealMat& V = vectors_[0];
    Eigen::VectorXd inv_eig(V.cols());
    for (int j = 0; j < V.cols(); ++j) inv_eig(j) = 1.0 / ((j + 1.0) * (j + 2.0));
    const Eigen::VectorXcd u = X.diagonal();
    const Eigen::VectorXcd coeff = V.transpose().cast<Complex>() * u;
    Y.diagonal() = V.cast<Complex>() * (inv_eig.cast<Complex>().cwiseProduct(coeff));
  }
  for (int m = 1; m < N_; ++m) {
    const auto d = diag_coeff(m);
    const auto e = off_coeff(m);
    const Eigen::VectorXcd up = thomas(d, e, upper_diagonal(X, m));
    const Eigen::VectorXcd lo = thomas(d, e, lower_diagonal(X, m));
    for (int r = 0; r < N_ - m; ++r) {
      Y(r, r + m) = up(r);
      Y(r + m, r) = lo(r);
    }
  }
  return Y;
}

std::vector<double> HoppeBasis::coefficients(const ComplexMat& X) const {
  if (X.rows() != N_ || X.cols() != N_) {
    throw SizeMismatchError("zeitlin: coefficients size mismatch");
  }
  std::vector<double> c(size(), 0.0);
  const double r2 = std::sqrt(2.0);
  {
    const Eigen::VectorXd im = X.diagonal().imag();
    const Eigen::VectorXd proj = vectors_[0].transpose() * im;
    for (int l = 1; l < N_; ++l) c[index(l, 0)] = proj(l - 1);
  }
  for (int m = 1; m < N_; ++m) {
    const Eigen::VectorXcd up = upper_diagonal(X, m);
    const Eigen::VectorXcd lo = lower_diagonal(X, m);
    const Eigen::VectorXd re = (up.real() - lo.real()) / r2;
    const Eigen::VectorXd im = (up.imag() + lo.imag()) / r2;
    const Eigen::VectorXd pre = vectors_[m].transpose() * re;
    const Eigen::VectorXd pim = vectors_[m].transpose() * im;
    for (int l = m; l < N_; ++l) {
      c[index(l, m)] = pre(l - m);
      c[index(l, -m)] = pim(l - m);
    }
  }
  return c;
}

ComplexMat HoppeBasis::synthesize(std::span<const double> c) const {
  if (c.size() != size()) throw SizeMismatchError("zeitlin: coefficient count mismatch");
  ComplexMat X = ComplexMat::Zero(N_, N_);
  const double r2 = std::sqrt(2.0);
  {
    Eigen::VectorXd a(N_ - 1);
    for (int l = 1; l < N_; ++l) a(l - 1) = c[index(l, 0)];
    const Eigen::VectorXd w = vectors_[0] * a;
    for (int r = 0; r < N_; ++r) X(r, r) = Complex(0.0, w(r));
  }
  for (int m = 1; m < N_; ++m) {
    Eigen::VectorXd a(N_ - m), b(N_ - m);
    for (int l = m; l < N_; ++l) {
      a(l - m) = c[index(l, m)];
      b(l - m) = c[index(l, -m)];
    }
    const Eigen::VectorXd wr = vectors_[m] * a / r2;
    const Eigen::VectorXd wi = vectors_[m] * b / r2;
    for (int r = 0; r < N_ - m; ++r) {
      X(r, r + m) = Complex(wr(r), wi(r));
      X(r + m, r) = Complex(-wr(r), wi(r));
    }
  }
  return X;
}

void HoppeBasis::save(const std::filesystem::path& file) const {
  std::ofstream out(file, std::ios::binary);
  if (!out) throw std::runtime_error("zeitlin: cannot write basis cache " + file.string());
  out.write(kCacheMagic, sizeof kCacheMagic);
  const std::int32_t n = N_;
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  for (const RealMat& V : vectors_) {
    const std::int32_t dims[2] = {static_cast<std::int32_t>(V.rows()),
                                  static_cast<std::int32_t>(V.cols())};
    out.write(reinterpret_cast<const char*>(dims), sizeof dims);
    out.write(reinterpret_cast<const char*>(V.data()),
              static_cast<std::streamsize>(sizeof(double) * V.size()));
  }
  if (!out) throw std::runtime_error("zeitlin: failed writing basis cache " + file.string());
}

HoppeBasis HoppeBasis::load(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("zeitlin: cannot read basis cache " + file.string());
  char magic[sizeof kCacheMagic];
  std::int32_t n = 0;
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(&n), sizeof n);
  if (!in || std::memcmp(magic, kCacheMagic, sizeof magic) != 0 || n < 2) {
    throw std::runtime_error("zeitlin: malformed basis cache " + file.string());
  }
  HoppeBasis basis;
  basis.N_ = n;
  basis.spin_ = 0.5 * (n - 1);
  const double s1 = basis.spin_ * (basis.spin_ + 1.0);
  basis.raise_.resize(n - 1);
  for (int r = 0; r + 1 < n; ++r) {
    const double m_next = basis.spin_ - (r + 1);
    basis.raise_[r] = std::sqrt(s1 - m_next * (m_next + 1.0));
  }
  basis.vectors_.resize(n);
  for (int m = 0; m < n; ++m) {
    std::int32_t dims[2] = {0, 0};
    in.read(reinterpret_cast<char*>(dims), sizeof dims);
    if (!in || dims[0] != n - m || dims[1] != (m == 0 ? n - 1 : n - m)) {
      throw std::runtime_error("zeitlin: malformed basis cache " + file.string());
    }
    RealMat V(dims[0], dims[1]);
    in.read(reinterpret_cast<char*>(V.data()),
            static_cast<std::streamsize>(sizeof(double) * V.size()));
    if (!in) throw std::runtime_error("zeitlin: truncated basis cache " + file.string());
    basis.vectors_[m] = std::move(V);
  }
  basis.build_elements();
  return basis;
}

ZeitlinEuler::ZeitlinEuler(int N, double alpha, bool noisy)
    : ZeitlinEuler(HoppeBasis(N), alpha, noisy) {}

ZeitlinEuler::ZeitlinEuler(HoppeBasis basis, double alpha, bool noisy)
    : basis_(std::move(basis)), spec_(AlgebraSpec::su(basis_.N())), alpha_(alpha), noisy_(noisy) {
  if (!std::isfinite(alpha)) throw std::invalid_argument("zeitlin: alpha must be finite");
  init();
}

void ZeitlinEuler::init() {
  const int N = basis_.N();
  band_min_ = (N + 1) / 2;
  for (int l = band_min_; l < N; ++l) {
    for (int m = -l; m <= l; ++m) channels_.push_back(basis_.index(l, m));
  }
}

namespace {

// Midpoint iterates are skew-Hermitian but need not be traceless; H only sees the su(N) part.
ComplexMat traceless(const ComplexMat& X) {
  ComplexMat Y = X;
  Y.diagonal().array() -= X.trace() / static_cast<double>(X.rows());
  return Y;
}

}  // namespace

double ZeitlinEuler::hamiltonian(const ComplexMat& X) const {
  const ComplexMat Y = traceless(X);
  return 0.5 * frobenius_inner<Complex>(basis_.laplacian_inv(Y), Y);
}

ComplexMat ZeitlinEuler::grad_h0(const ComplexMat& X) const {
  require_state(X);
  return basis_.laplacian_inv(traceless(X));
}

double ZeitlinEuler::noise_hamiltonian(const ComplexMat& X, int k) const {
  require_channel(k);
  const std::size_t idx = channels_[k];
  const int l = basis_.degree(idx);
  const double c = frobenius_inner<Complex>(basis_.element(idx), X);
  return alpha_ / (2.0 * l * (l + 1.0)) * c * c;
}

ComplexMat ZeitlinEuler::grad_hk(const ComplexMat& X, int k) const {
  require_channel(k);
  require_state(X);
  const std::size_t idx = channels_[k];
  const int l = basis_.degree(idx);
  const double c = frobenius_inner<Complex>(basis_.element(idx), X);
  return (alpha_ / (l * (l + 1.0)) * c) * basis_.element(idx);
}

ComplexMat ZeitlinEuler::grad_lm(const ComplexMat& X, int l, int m) const {
  if (l < band_min_ || l >= basis_.N() || m < -l || m > l) {
    std::ostringstream os;
    os << "zeitlin: (l, m) = (" << l << ", " << m << ") outside the noise band l = " << band_min_
       << ".." << basis_.N() - 1;
    throw std::out_of_range(os.str());
  }
  const std::size_t idx = basis_.index(l, m);
  for (std::size_t k = 0; k < channels_.size(); ++k) {
    if (channels_[k] == idx) return grad_hk(X, static_cast<int>(k));
  }
  throw std::out_of_range("zeitlin: noise is disabled");
}

ComplexMat ZeitlinEuler::noise_field(const ComplexMat& X, std::span<const double> weights) const {
  if (static_cast<int>(weights.size()) != noise_channels()) {
    throw SizeMismatchError("zeitlin: noise_field channel count mismatch");
  }
  require_state(X);
  if (!noisy_) return ComplexMat::Zero(X.rows(), X.cols());
  const std::vector<double> c = basis_.coefficients(X);
  std::vector<double> d(c.size(), 0.0);
  for (std::size_t k = 0; k < channels_.size(); ++k) {
    const std::size_t idx = channels_[k];
    const int l = basis_.degree(idx);
    d[idx] = weights[k] * alpha_ / (l * (l + 1.0)) * c[idx];
  }
  return basis_.synthesize(d);
}

std::vector<ComplexMat> ZeitlinEuler::phase_basis() const {
  std::vector<ComplexMat> out;
  out.reserve(basis_.size());
  for (std::size_t k = 0; k < basis_.size(); ++k) out.push_back(basis_.element(k));
  return out;
}

ComplexMat random_vorticity(const ZeitlinEuler& model, std::uint64_t seed) {
  const double dim = static_cast<double>(model.basis().size());
  return random_state<Complex>(model, seed, std::sqrt(dim));
}

}  // namespace isomp
