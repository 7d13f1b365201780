#ifndef BRACKETFLOW_HERMITIAN_HPP
#define BRACKETFLOW_HERMITIAN_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

namespace bracketflow {

template <typename Scalar>
using Complex = std::complex<Scalar>;

template <typename Scalar>
using ComplexMatrix = Eigen::Matrix<Complex<Scalar>, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
using RealVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// Thrown when a matrix, dimension or parameter violates an operation's contract.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when an iterative routine fails to converge.
class ConvergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kHermiticityTolerance = 1e-12;
inline constexpr double kDegeneracyThreshold = 1e-12;
inline constexpr double kUnitNormTolerance = 1e-9;

/// Dense N x N complex Hermitian matrix, N >= 2.
///
/// Construction absorbs floating-point asymmetry below 1e-12 (relative to the
/// largest entry, floor 1) by symmetrizing to (A + A^dagger)/2; anything larger
/// is rejected.
template <typename Scalar = double>
class HermitianMatrix {
 public:
  using MatrixType = ComplexMatrix<Scalar>;

  explicit HermitianMatrix(const MatrixType& a) : m_(a) {
    if (a.rows() != a.cols()) {
      throw ContractError("HermitianMatrix: matrix is not square");
    }
    if (a.rows() < 2) {
      throw ContractError("HermitianMatrix: dimension must be at least 2");
    }
    if (!a.allFinite()) {
      throw ContractError("HermitianMatrix: non-finite entry");
    }
    const Scalar scale = std::max<Scalar>(Scalar(1), a.cwiseAbs().maxCoeff());
    const Scalar deviation = (a - a.adjoint()).cwiseAbs().maxCoeff();
    if (deviation > Scalar(kHermiticityTolerance) * scale) {
      throw ContractError("HermitianMatrix: deviation from Hermiticity " +
                          std::to_string(double(deviation)) + " exceeds tolerance");
    }
    m_ = (a + a.adjoint()) / Scalar(2);
  }

  static HermitianMatrix identity(Eigen::Index n) { return HermitianMatrix(MatrixType::Identity(n, n)); }

  static HermitianMatrix diagonal(const RealVector<Scalar>& d) {
    return HermitianMatrix(d.template cast<Complex<Scalar>>().asDiagonal().toDenseMatrix());
  }

  Eigen::Index dim() const { return m_.rows(); }
  const MatrixType& matrix() const { return m_; }
  Complex<Scalar> operator()(Eigen::Index j, Eigen::Index k) const { return m_(j, k); }

  Scalar trace() const { return m_.trace().real(); }

  /// Frobenius norm.
  Scalar norm() const { return m_.norm(); }

 private:
  MatrixType m_;
};

/// Pauli matrices; index 0,1,2 -> sigma_x, sigma_y, sigma_z.
template <typename Scalar = double>
ComplexMatrix<Scalar> pauli(int k) {
  using C = Complex<Scalar>;
  ComplexMatrix<Scalar> s(2, 2);
  switch (k) {
    case 0:
      s << C(0), C(1), C(1), C(0);
      break;
    case 1:
      s << C(0), C(0, -1), C(0, 1), C(0);
      break;
    case 2:
      s << C(1), C(0), C(0), C(-1);
      break;
    default:
      throw ContractError("pauli: index must be 0, 1 or 2");
  }
  return s;
}

/// sigma . a for a real 3-vector a.
template <typename Scalar>
ComplexMatrix<Scalar> pauli_dot(const Vector3<Scalar>& a) {
  return a.x() * pauli<Scalar>(0) + a.y() * pauli<Scalar>(1) + a.z() * pauli<Scalar>(2);
}

/// Unit vector from polar angle theta and azimuth phi.
template <typename Scalar>
Vector3<Scalar> unit_vector(Scalar theta, Scalar phi) {
  return Vector3<Scalar>(std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta));
}

/// Wraps an angle into [0, 2 pi).
template <typename Scalar>
Scalar wrap_angle(Scalar phi) {
  constexpr Scalar two_pi = Scalar(2) * std::numbers::pi_v<Scalar>;
  Scalar w = std::fmod(phi, two_pi);
  if (w < 0) w += two_pi;
  if (w >= two_pi) w = 0;
  return w;
}

/// H = (1/2) u 1 + (1/2) nu sigma.n for a 2 x 2 Hermitian matrix, with the
/// spherical angles of n.
template <typename Scalar = double>
struct BlochDecomposition {
  Scalar u{0};
  Scalar nu{0};
  Vector3<Scalar> n{Scalar(0), Scalar(0), Scalar(1)};
  Scalar theta{0};
  Scalar phi{0};
  bool degenerate{false};
};

/// G = (1/2) v 1 + (1/2) mu sigma.g together with the coupling lambda.
template <typename Scalar = double>
struct ReferenceFrame {
  Scalar v{0};
  Scalar mu{2};
  Vector3<Scalar> g{Scalar(0), Scalar(0), Scalar(1)};
  Scalar lambda{10};

  ReferenceFrame() = default;
  ReferenceFrame(Scalar v_, Scalar mu_, Scalar lambda_, Vector3<Scalar> g_ = Vector3<Scalar>::UnitZ())
      : v(v_), mu(mu_), g(g_), lambda(lambda_) {
    validate();
  }

  void validate() const {
    if (!(mu > 0) || !std::isfinite(mu)) throw ContractError("ReferenceFrame: mu must be positive");
    // lambda = +inf is the zero-noise limit and is allowed.
    if (!(lambda > 0)) throw ContractError("ReferenceFrame: lambda must be positive");
    if (std::abs(g.norm() - Scalar(1)) > Scalar(kHermiticityTolerance)) {
      throw ContractError("ReferenceFrame: g must be a unit vector");
    }
  }

  /// Relaxation rate omega = lambda nu mu for a Hamiltonian of Bloch radius nu.
  Scalar omega(Scalar nu) const { return lambda * nu * mu; }
};

template <typename Scalar>
Vector3<Scalar> spherical_angles(const Vector3<Scalar>& n) {
  const Scalar rho = std::hypot(n.x(), n.y());
  const Scalar theta = std::atan2(rho, n.z());
  const Scalar phi = (rho == Scalar(0)) ? Scalar(0) : wrap_angle(std::atan2(n.y(), n.x()));
  return Vector3<Scalar>(theta, phi, rho);
}

/// (1/2) u 1 + (1/2) nu sigma.n. n within 1e-9 of unit norm is renormalized.
template <typename Scalar>
HermitianMatrix<Scalar> from_bloch(Scalar u, Scalar nu, const Vector3<Scalar>& n) {
  if (nu < 0) throw ContractError("from_bloch: nu must be non-negative");
  const Scalar len = n.norm();
  if (std::abs(len - Scalar(1)) > Scalar(kUnitNormTolerance)) {
    throw ContractError("from_bloch: n is not a unit vector");
  }
  const Vector3<Scalar> unit = n / len;
  ComplexMatrix<Scalar> h = ComplexMatrix<Scalar>::Identity(2, 2) * (u / Scalar(2)) + pauli_dot<Scalar>(unit) * (nu / Scalar(2));
  return HermitianMatrix<Scalar>(h);
}

template <typename Scalar>
HermitianMatrix<Scalar> from_bloch(const BlochDecomposition<Scalar>& b) {
  return from_bloch(b.u, b.nu, b.n);
}

/// G of a reference frame as an explicit matrix.
template <typename Scalar>
HermitianMatrix<Scalar> reference_matrix(const ReferenceFrame<Scalar>& frame) {
  return from_bloch(frame.v, frame.mu, frame.g);
}

/// Bloch data of a 2 x 2 Hermitian matrix; angles are taken in the standard
/// basis (g = z). nu < 1e-12 is flagged degenerate with n = (0, 0, 1).
template <typename Scalar>
BlochDecomposition<Scalar> to_bloch(const HermitianMatrix<Scalar>& h) {
  if (h.dim() != 2) throw ContractError("to_bloch: dimension must be 2");
  BlochDecomposition<Scalar> b;
  b.u = h.trace();
  // tr(H sigma_k) = nu n_k
  Vector3<Scalar> r;
  r.x() = Scalar(2) * h(0, 1).real();
  r.y() = Scalar(-2) * h(0, 1).imag();
  r.z() = (h(0, 0) - h(1, 1)).real();
  b.nu = r.norm();
  if (b.nu < Scalar(kDegeneracyThreshold)) {
    b.degenerate = true;
    b.n = Vector3<Scalar>::UnitZ();
    b.theta = 0;
    b.phi = 0;
    return b;
  }
  b.n = r / b.nu;
  const Vector3<Scalar> angles = spherical_angles(b.n);
  b.theta = angles.x();
  b.phi = angles.y();
  return b;
}

namespace detail {
template <typename Scalar>
void require_same_dim(const HermitianMatrix<Scalar>& a, const HermitianMatrix<Scalar>& b, const char* op) {
  if (a.dim() != b.dim()) throw ContractError(std::string(op) + ": dimension mismatch");
}
}  // namespace detail

/// AB - BA (anti-Hermitian).
template <typename Scalar>
ComplexMatrix<Scalar> commutator(const HermitianMatrix<Scalar>& a, const HermitianMatrix<Scalar>& b) {
  detail::require_same_dim(a, b, "commutator");
  return a.matrix() * b.matrix() - b.matrix() * a.matrix();
}

/// -lambda [H, [H, G]] on raw matrices, no validation. Used by integrators.
template <typename Derived1, typename Derived2>
auto double_bracket_raw(const Eigen::MatrixBase<Derived1>& h, const Eigen::MatrixBase<Derived2>& g,
                        typename Derived1::RealScalar lambda) {
  using M = typename Derived1::PlainObject;
  const M hg = h * g - g * h;
  return M(-lambda * (h * hg - hg * h));
}

/// -lambda [H, [H, G]].
template <typename Scalar>
HermitianMatrix<Scalar> double_bracket_rhs(const HermitianMatrix<Scalar>& h, const HermitianMatrix<Scalar>& g, Scalar lambda) {
  detail::require_same_dim(h, g, "double_bracket_rhs");
  if (!(lambda > 0)) throw ContractError("double_bracket_rhs: lambda must be positive");
  return HermitianMatrix<Scalar>(double_bracket_raw(h.matrix(), g.matrix(), lambda));
}

/// tr (H - G)^2.
template <typename Scalar>
Scalar trace_distance_sq(const HermitianMatrix<Scalar>& h, const HermitianMatrix<Scalar>& g) {
  detail::require_same_dim(h, g, "trace_distance_sq");
  // For Hermitian D, tr D^2 = sum |D_jk|^2.
  return (h.matrix() - g.matrix()).squaredNorm();
}

/// tr([G,H]^dagger [G,H]) = squared Frobenius norm of the commutator.
template <typename Scalar>
Scalar commutator_norm_sq(const HermitianMatrix<Scalar>& h, const HermitianMatrix<Scalar>& g) {
  detail::require_same_dim(h, g, "commutator_norm_sq");
  return (g.matrix() * h.matrix() - h.matrix() * g.matrix()).squaredNorm();
}

/// Re tr(H G).
template <typename Scalar>
Scalar trace_product(const HermitianMatrix<Scalar>& h, const HermitianMatrix<Scalar>& g) {
  detail::require_same_dim(h, g, "trace_product");
  return (h.matrix().cwiseProduct(g.matrix().transpose())).sum().real();
}

}  // namespace bracketflow

#endif  // BRACKETFLOW_HERMITIAN_HPP
