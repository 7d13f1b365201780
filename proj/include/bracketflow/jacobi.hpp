#ifndef BRACKETFLOW_JACOBI_HPP
#define BRACKETFLOW_JACOBI_HPP

#include "bracketflow/hermitian.hpp"

#include <numeric>

namespace bracketflow {

template <typename Scalar = double>
struct Eigensystem {
  RealVector<Scalar> values;     // ascending
  ComplexMatrix<Scalar> vectors; // columns, matching values
  int sweeps{0};
};

inline constexpr int kMaxJacobiSweeps = 100;

namespace detail {

template <typename Scalar>
Scalar off_diagonal_norm(const ComplexMatrix<Scalar>& a) {
  Scalar s = 0;
  for (Eigen::Index j = 0; j < a.rows(); ++j)
    for (Eigen::Index k = 0; k < a.cols(); ++k)
      if (j != k) s += std::norm(a(j, k));
  return std::sqrt(s);
}

}  // namespace detail

/// Cyclic complex Jacobi diagonalization.
///
/// Each rotation first removes the phase of A(p,q) with a diagonal unitary and
/// then applies the real symmetric Jacobi rotation; iterates until the
/// off-diagonal Frobenius norm drops below 1e-12 * max(1, |A|_F).
template <typename Scalar>
Eigensystem<Scalar> jacobi_eigensystem(const HermitianMatrix<Scalar>& h, bool want_vectors = true) {
  using C = Complex<Scalar>;
  const Eigen::Index n = h.dim();
  ComplexMatrix<Scalar> a = h.matrix();
  ComplexMatrix<Scalar> v = ComplexMatrix<Scalar>::Identity(n, n);
  const Scalar target = Scalar(1e-12) * std::max<Scalar>(Scalar(1), a.norm());

  int sweep = 0;
  for (; sweep <= kMaxJacobiSweeps; ++sweep) {
    if (detail::off_diagonal_norm(a) < target) break;
    if (sweep == kMaxJacobiSweeps) {
      throw ConvergenceError("jacobi_eigensystem: no convergence after 100 sweeps");
    }
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const C z = a(p, q);
        const Scalar r = std::abs(z);
        if (r == Scalar(0)) continue;
        const C phase = z / r;  // e^{i alpha}
        const Scalar app = a(p, p).real();
        const Scalar aqq = a(q, q).real();
        const Scalar zeta = (aqq - app) / (Scalar(2) * r);
        const Scalar t = (zeta >= 0 ? Scalar(1) : Scalar(-1)) / (std::abs(zeta) + std::sqrt(Scalar(1) + zeta * zeta));
        const Scalar c = Scalar(1) / std::sqrt(Scalar(1) + t * t);
        const Scalar s = t * c;
        // W restricted to (p,q) = diag(1, conj(phase)) * [[c, s], [-s, c]]
        const C wpp(c), wpq(s);
        const C wqp = -s * std::conj(phase);
        const C wqq = c * std::conj(phase);
        for (Eigen::Index k = 0; k < n; ++k) {
          const C akp = a(k, p), akq = a(k, q);
          a(k, p) = akp * wpp + akq * wqp;
          a(k, q) = akp * wpq + akq * wqq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const C apk = a(p, k), aqk = a(q, k);
          a(p, k) = std::conj(wpp) * apk + std::conj(wqp) * aqk;
          a(q, k) = std::conj(wpq) * apk + std::conj(wqq) * aqk;
        }
        a(p, q) = a(q, p) = C(0);
        a(p, p) = C(a(p, p).real());
        a(q, q) = C(a(q, q).real());
        if (want_vectors) {
          for (Eigen::Index k = 0; k < n; ++k) {
            const C vkp = v(k, p), vkq = v(k, q);
            v(k, p) = vkp * wpp + vkq * wqp;
            v(k, q) = vkp * wpq + vkq * wqq;
          }
        }
      }
    }
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index(0));
  std::sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return a(i, i).real() < a(j, j).real(); });

  Eigensystem<Scalar> out;
  out.values.resize(n);
  out.sweeps = sweep;
  if (want_vectors) out.vectors.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index src = order[static_cast<std::size_t>(i)];
    out.values(i) = a(src, src).real();
    if (want_vectors) out.vectors.col(i) = v.col(src);
  }
  return out;
}

/// Ascending eigenvalues. Closed form (u -+ nu)/2 for 2 x 2, Jacobi otherwise.
template <typename Scalar>
RealVector<Scalar> eigenvalues(const HermitianMatrix<Scalar>& h) {
  if (h.dim() == 2) {
    const Scalar u = h.trace();
    const Scalar d = (h(0, 0) - h(1, 1)).real();
    const Scalar nu = std::sqrt(d * d + Scalar(4) * std::norm(h(0, 1)));
    RealVector<Scalar> e(2);
    e << (u - nu) / Scalar(2), (u + nu) / Scalar(2);
    return e;
  }
  return jacobi_eigensystem(h, false).values;
}

/// Smallest gap between consecutive eigenvalues.
template <typename Scalar>
Scalar min_eigenvalue_gap(const RealVector<Scalar>& sorted) {
  Scalar gap = std::numeric_limits<Scalar>::infinity();
  for (Eigen::Index i = 1; i < sorted.size(); ++i) gap = std::min(gap, sorted(i) - sorted(i - 1));
  return gap;
}

/// Degenerate: nu < 1e-12 for 2 x 2, eigenvalue gap < 1e-12 |H| otherwise.
template <typename Scalar>
bool is_degenerate(const HermitianMatrix<Scalar>& h) {
  const RealVector<Scalar> e = eigenvalues(h);
  if (h.dim() == 2) return (e(1) - e(0)) < Scalar(kDegeneracyThreshold);
  return min_eigenvalue_gap(e) < Scalar(kDegeneracyThreshold) * std::max<Scalar>(h.norm(), std::numeric_limits<Scalar>::min());
}

template <typename Scalar>
Scalar determinant(const HermitianMatrix<Scalar>& h) {
  return eigenvalues(h).prod();
}

}  // namespace bracketflow

#endif  // BRACKETFLOW_JACOBI_HPP
