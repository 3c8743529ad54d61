#pragma once

#include "isomp/algebra.hpp"

#include <memory>
#include <span>
#include <string>
#include <vector>

namespace isomp {

struct Casimirs {
  /// Re tr(X^2)
  double enstrophy = 0.0;
  std::vector<Complex> spectrum;
  /// Frobenius norms of the diagonal blocks, empty for single-block models.
  std::vector<double> block_norms;
};

/// A stochastic Lie-Poisson system d X = [grad H0(X)*, X] dt + sum_k [grad Hk(X)*, X] o dW^k
/// on the dual of a J-quadratic algebra. Gradients are taken with respect to the
/// real Frobenius pairing and must land in the algebra. Implementations are
/// immutable and safe to evaluate concurrently.
template <typename Scalar>
class LiePoissonSystem {
 public:
  using Matrix = Mat<Scalar>;

  virtual ~LiePoissonSystem() = default;

  virtual std::string name() const = 0;
  virtual const AlgebraSpec& algebra() const = 0;
  virtual int noise_channels() const = 0;

  virtual double hamiltonian(const Matrix& X) const = 0;
  virtual Matrix grad_h0(const Matrix& X) const = 0;

  virtual double noise_hamiltonian(const Matrix& X, int k) const = 0;
  virtual Matrix grad_hk(const Matrix& X, int k) const = 0;

  /// sum_k weights[k] * grad Hk(X). Models override this when the sum has structure.
  virtual Matrix noise_field(const Matrix& X, std::span<const double> weights) const;

  /// Orthonormal basis (real Frobenius pairing) of the model's phase space.
  virtual std::vector<Matrix> phase_basis() const = 0;

  virtual std::vector<double> block_norms(const Matrix& X) const;

  Casimirs casimirs(const Matrix& X) const;

 protected:
  void require_channel(int k) const;
  void require_state(const Matrix& X) const;
};

template <typename Scalar>
using SystemPtr = std::shared_ptr<const LiePoissonSystem<Scalar>>;

extern template class LiePoissonSystem<double>;
extern template class LiePoissonSystem<Complex>;

}  // namespace isomp
