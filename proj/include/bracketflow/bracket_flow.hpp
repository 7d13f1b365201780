#ifndef BRACKETFLOW_BRACKET_FLOW_HPP
#define BRACKETFLOW_BRACKET_FLOW_HPP

#include "bracketflow/hermitian.hpp"
#include "bracketflow/jacobi.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace bracketflow {

enum class FlowVariant { PureDoubleBracket, UnitaryModified };

inline const char* to_string(FlowVariant v) {
  return v == FlowVariant::PureDoubleBracket ? "pure" : "unitary";
}

/// Raised when the eigenvalue drift along an integration exceeds 1e-3; the
/// step size is too large for the stiffness of the problem.
class FlowInstabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Right-hand side of the flow on raw matrices.
///
/// PureDoubleBracket: -lambda [H, [H, G]].
/// UnitaryModified:   +i [H, G] - lambda [H, [H, G]], which advances the
/// azimuth about the G axis as phi_0 + mu t.
template <typename Scalar>
ComplexMatrix<Scalar> flow_rhs(const ComplexMatrix<Scalar>& h, const ComplexMatrix<Scalar>& g, Scalar lambda, FlowVariant variant) {
  const ComplexMatrix<Scalar> hg = h * g - g * h;
  ComplexMatrix<Scalar> out = -lambda * (h * hg - hg * h);
  if (variant == FlowVariant::UnitaryModified) out += Complex<Scalar>(0, 1) * hg;
  return out;
}

/// One classical RK4 step.
template <typename Scalar>
ComplexMatrix<Scalar> rk4_step(const ComplexMatrix<Scalar>& h, const ComplexMatrix<Scalar>& g, Scalar lambda, FlowVariant variant, Scalar dt) {
  const ComplexMatrix<Scalar> k1 = flow_rhs<Scalar>(h, g, lambda, variant);
  const ComplexMatrix<Scalar> k2 = flow_rhs<Scalar>(h + (dt / 2) * k1, g, lambda, variant);
  const ComplexMatrix<Scalar> k3 = flow_rhs<Scalar>(h + (dt / 2) * k2, g, lambda, variant);
  const ComplexMatrix<Scalar> k4 = flow_rhs<Scalar>(h + dt * k3, g, lambda, variant);
  ComplexMatrix<Scalar> next = h + (dt / 6) * (k1 + Scalar(2) * k2 + Scalar(2) * k3 + k4);
  // Re-impose exact Hermiticity; RK4 combinations of Hermitian matrices only
  // drift at round-off level.
  return (next + next.adjoint()) / Scalar(2);
}

template <typename Scalar = double>
struct TrajectorySample {
  Scalar t{0};
  HermitianMatrix<Scalar> state;
  RealVector<Scalar> eigenvalues;
  Scalar trace_hg{0};
  Scalar trace_distance_sq{0};
  Scalar commutator_norm_sq{0};
};

template <typename Scalar = double>
struct Trajectory {
  std::vector<TrajectorySample<Scalar>> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  const TrajectorySample<Scalar>& front() const { return samples.front(); }
  const TrajectorySample<Scalar>& back() const { return samples.back(); }
};

template <typename Scalar>
TrajectorySample<Scalar> make_sample(Scalar t, const HermitianMatrix<Scalar>& h, const HermitianMatrix<Scalar>& g) {
  return TrajectorySample<Scalar>{t, h, eigenvalues(h), trace_product(h, g), trace_distance_sq(h, g), commutator_norm_sq(h, g)};
}

/// Step-size heuristic: 1e-3/omega for 2 x 2, 1e-3/(lambda |H0| |G|) otherwise.
template <typename Scalar>
Scalar default_time_step(const HermitianMatrix<Scalar>& h0, const HermitianMatrix<Scalar>& g, Scalar lambda) {
  Scalar rate;
  if (h0.dim() == 2) {
    rate = lambda * to_bloch(h0).nu * to_bloch(g).nu;
  } else {
    rate = lambda * h0.norm() * g.norm();
  }
  if (!(rate > 0) || !std::isfinite(rate)) rate = std::max<Scalar>(lambda, Scalar(1));
  return Scalar(1e-3) / rate;
}

/// Fixed-step RK4 integration of the flow from 0 to t_end, storing every
/// sample_every-th step plus the final state.
template <typename Scalar>
Trajectory<Scalar> integrate_flow(const HermitianMatrix<Scalar>& h0, const HermitianMatrix<Scalar>& g, Scalar lambda, FlowVariant variant,
                                  Scalar t_end, Scalar dt, int sample_every = 1) {
  detail::require_same_dim(h0, g, "integrate_flow");
  if (!(lambda > 0) || !std::isfinite(lambda)) throw ContractError("integrate_flow: lambda must be positive and finite");
  if (!(dt > 0)) throw ContractError("integrate_flow: dt must be positive");
  if (!(t_end >= 0)) throw ContractError("integrate_flow: t_end must be non-negative");
  if (sample_every < 1) throw ContractError("integrate_flow: sample_every must be at least 1");

  Trajectory<Scalar> traj;
  traj.samples.push_back(make_sample(Scalar(0), h0, g));
  const RealVector<Scalar> spectrum0 = traj.samples.front().eigenvalues;
  const Scalar drift_limit = Scalar(1e-3) * std::max<Scalar>(Scalar(1), spectrum0.cwiseAbs().maxCoeff());

  const auto n_steps = static_cast<long long>(std::ceil(t_end / dt - Scalar(1e-9)));
  ComplexMatrix<Scalar> h = h0.matrix();
  Scalar t = 0;
  for (long long step = 1; step <= n_steps; ++step) {
    const Scalar t_next = (step == n_steps) ? t_end : Scalar(step) * dt;
    h = rk4_step<Scalar>(h, g.matrix(), lambda, variant, t_next - t);
    t = t_next;
    if (step % sample_every == 0 || step == n_steps) {
      if (!h.allFinite()) {
        throw FlowInstabilityError("integrate_flow: state became non-finite; reduce dt");
      }
      auto sample = make_sample(t, HermitianMatrix<Scalar>(h), g);
      const Scalar drift = (sample.eigenvalues - spectrum0).cwiseAbs().maxCoeff();
      if (drift > drift_limit) {
        throw FlowInstabilityError("integrate_flow: eigenvalue drift " + std::to_string(double(drift)) +
                                   " exceeds 1e-3; reduce dt");
      }
      traj.samples.push_back(std::move(sample));
    }
  }
  return traj;
}

/// Unitary V = [|+g>, |-g>] with V^dagger (sigma.g) V = sigma_z.
template <typename Scalar>
ComplexMatrix<Scalar> frame_unitary(const Vector3<Scalar>& g) {
  const Vector3<Scalar> ang = spherical_angles(g);
  const Scalar ct = std::cos(ang.x() / 2), st = std::sin(ang.x() / 2);
  const Complex<Scalar> e = std::polar(Scalar(1), ang.y());
  ComplexMatrix<Scalar> v(2, 2);
  v << Complex<Scalar>(ct), -std::conj(e) * st, e * st, Complex<Scalar>(ct);
  return v;
}

/// Bloch data of H expressed in the eigenbasis of G, where G's eigenvector of
/// larger eigenvalue maps to g = (0, 0, 1).
template <typename Scalar>
BlochDecomposition<Scalar> to_bloch_in_frame(const HermitianMatrix<Scalar>& h, const HermitianMatrix<Scalar>& g) {
  const BlochDecomposition<Scalar> gb = to_bloch(g);
  if (gb.degenerate) throw ContractError("to_bloch_in_frame: reference matrix is degenerate");
  const ComplexMatrix<Scalar> v = frame_unitary<Scalar>(gb.n);
  return to_bloch(HermitianMatrix<Scalar>(v.adjoint() * h.matrix() * v));
}

/// Explicit solution of the 2 x 2 flow at time t.
///
/// In the G frame: cos theta_t = tanh(c0 - omega t), c0 = artanh(cos theta_0),
/// omega = lambda nu mu; phi_t = phi_0 (pure) or phi_0 + mu t (unitary).
/// Initial states exactly at a pole are constant solutions.
template <typename Scalar>
HermitianMatrix<Scalar> closed_form_2x2(const HermitianMatrix<Scalar>& h0, const HermitianMatrix<Scalar>& g, Scalar lambda, Scalar t,
                                        FlowVariant variant) {
  if (h0.dim() != 2 || g.dim() != 2) throw ContractError("closed_form_2x2: matrices must be 2 x 2");
  if (!(lambda > 0)) throw ContractError("closed_form_2x2: lambda must be positive");
  const BlochDecomposition<Scalar> gb = to_bloch(g);
  if (gb.degenerate) throw ContractError("closed_form_2x2: G is degenerate; the flow has a fixed point");
  const ComplexMatrix<Scalar> v = frame_unitary<Scalar>(gb.n);
  const BlochDecomposition<Scalar> hb = to_bloch(HermitianMatrix<Scalar>(v.adjoint() * h0.matrix() * v));
  if (hb.degenerate) throw ContractError("closed_form_2x2: H0 is degenerate; the flow has a fixed point");

  const Scalar mu = gb.nu;
  const Scalar phi_t = variant == FlowVariant::UnitaryModified ? hb.phi + mu * t : hb.phi;
  const Scalar sin0 = std::hypot(hb.n.x(), hb.n.y());
  Scalar cos_t, sin_t;
  if (sin0 == Scalar(0)) {
    cos_t = hb.n.z() > 0 ? Scalar(1) : Scalar(-1);
    sin_t = 0;
  } else {
    const Scalar z = hb.n.z();
    // artanh(z) without cancellation near |z| = 1: 1 - z^2 = sin^2.
    const Scalar c0 = z >= 0 ? std::log((Scalar(1) + z) / sin0) : -std::log((Scalar(1) - z) / sin0);
    const Scalar s = lambda * hb.nu * mu * t - c0;
    cos_t = -std::tanh(s);
    sin_t = Scalar(1) / std::cosh(s);
  }
  const Vector3<Scalar> n_t(sin_t * std::cos(phi_t), sin_t * std::sin(phi_t), cos_t);
  ComplexMatrix<Scalar> hf = ComplexMatrix<Scalar>::Identity(2, 2) * (hb.u / 2) + pauli_dot<Scalar>(n_t) * (hb.nu / 2);
  return HermitianMatrix<Scalar>(v * hf * v.adjoint());
}

/// Inverse metric of the invariant sphere in (theta, phi) and its volume weight.
template <typename Scalar = double>
struct SphereMetric {
  Scalar theta{0};

  Scalar inverse_theta_theta() const { return Scalar(4); }
  Scalar inverse_phi_phi() const {
    const Scalar s = std::sin(theta);
    return Scalar(4) / (s * s);
  }
  /// dV = (1/4) sin theta dtheta dphi.
  Scalar volume_weight() const { return std::sin(theta) / Scalar(4); }
};

/// Expectation of G in the pure state at (theta, phi): (v + mu cos theta)/2.
template <typename Scalar>
Scalar potential(Scalar theta, Scalar /*phi*/, const ReferenceFrame<Scalar>& frame) {
  return (frame.v + frame.mu * std::cos(theta)) / 2;
}

/// (d/dtheta, d/dphi) of potential().
template <typename Scalar>
std::pair<Scalar, Scalar> potential_gradient(Scalar theta, Scalar /*phi*/, const ReferenceFrame<Scalar>& frame) {
  return {-frame.mu * std::sin(theta) / 2, Scalar(0)};
}

template <typename Scalar = double>
struct SphereVelocity {
  Scalar dtheta{0};
  Scalar dphi{0};
  bool at_pole{false};
};

/// Reduced flow on the sphere: (omega sin theta, 0), or (omega sin theta, mu)
/// for the unitary-modified variant.
template <typename Scalar>
SphereVelocity<Scalar> bloch_vector_field(Scalar theta, Scalar /*phi*/, const ReferenceFrame<Scalar>& frame, Scalar nu, FlowVariant variant) {
  SphereVelocity<Scalar> out;
  out.dtheta = frame.omega(nu) * std::sin(theta);
  out.dphi = variant == FlowVariant::UnitaryModified ? frame.mu : Scalar(0);
  return out;
}

struct VectorFieldRow {
  double theta{0};
  double phi{0};
  double dtheta{0};
  double dphi{0};
};

/// The reduced field on an n_theta x n_phi grid: theta spans [0, pi] including
/// the poles, phi spans [0, 2 pi) periodically. Rows are theta-major.
template <typename Scalar = double>
std::vector<VectorFieldRow> vector_field_grid(const ReferenceFrame<Scalar>& frame, Scalar nu, FlowVariant variant, int n_theta,
                                              int n_phi) {
  if (n_theta < 2 || n_phi < 1) throw ContractError("vector_field_grid: need n_theta >= 2 and n_phi >= 1");
  frame.validate();
  const Scalar pi = std::numbers::pi_v<Scalar>;
  std::vector<VectorFieldRow> rows;
  rows.reserve(std::size_t(n_theta) * std::size_t(n_phi));
  for (int i = 0; i < n_theta; ++i) {
    const Scalar theta = i + 1 == n_theta ? pi : pi * Scalar(i) / Scalar(n_theta - 1);
    for (int j = 0; j < n_phi; ++j) {
      const Scalar phi = 2 * pi * Scalar(j) / Scalar(n_phi);
      const SphereVelocity<Scalar> v = bloch_vector_field(theta, phi, frame, nu, variant);
      rows.push_back({double(theta), double(phi), double(v.dtheta), double(v.dphi)});
    }
  }
  return rows;
}

/// Drift -(1/2) lambda nu g^{ab} d_b G of the gradient flow. At a pole the
/// phi component of the inverse metric is singular; returns zero with at_pole.
template <typename Scalar>
SphereVelocity<Scalar> gradient_drift(Scalar theta, Scalar phi, const ReferenceFrame<Scalar>& frame, Scalar nu) {
  SphereVelocity<Scalar> out;
  if (std::abs(std::sin(theta)) < Scalar(1e-300) || theta <= 0 || theta >= std::numbers::pi_v<Scalar>) {
    out.at_pole = true;
    return out;
  }
  const SphereMetric<Scalar> metric{theta};
  const auto [d_theta, d_phi] = potential_gradient(theta, phi, frame);
  const Scalar pre = -frame.lambda * nu / 2;
  out.dtheta = pre * metric.inverse_theta_theta() * d_theta;
  out.dphi = pre * metric.inverse_phi_phi() * d_phi;
  return out;
}

template <typename Scalar = double>
struct Monotonicity {
  bool holds{true};
  std::size_t first_violation{0};
  Scalar worst_violation{0};
};

/// Non-increasing (sign = -1) or non-decreasing (sign = +1) check with an
/// absolute round-off allowance.
template <typename Scalar>
Monotonicity<Scalar> check_monotone(const std::vector<Scalar>& seq, int sign, Scalar allowance) {
  Monotonicity<Scalar> m;
  for (std::size_t i = 1; i < seq.size(); ++i) {
    const Scalar step = sign * (seq[i] - seq[i - 1]);
    if (step < -allowance) {
      if (m.holds) m.first_violation = i;
      m.holds = false;
      m.worst_violation = std::max(m.worst_violation, -step);
    }
  }
  return m;
}

template <typename Scalar = double>
struct DiagnosticsReport {
  std::size_t n_samples{0};
  Scalar eigenvalue_drift{0};
  Scalar trace_drift{0};
  Scalar determinant_drift{0};  // relative to max(1, |det H_0|)
  std::vector<Scalar> times;
  std::vector<Scalar> trace_hg;
  std::vector<Scalar> trace_distance_sq;
  std::vector<Scalar> commutator_norm_sq;
  Monotonicity<Scalar> trace_hg_nonincreasing;
  Monotonicity<Scalar> trace_distance_nondecreasing;
  Monotonicity<Scalar> commutator_nonincreasing;
  Scalar initial_commutator_norm_sq{0};
  Scalar final_commutator_norm_sq{0};
  /// 2 x 2 only: least-squares rate of the unwrapped azimuth in the G frame,
  /// over samples with sin theta > 1e-6.
  std::optional<Scalar> azimuth_rate;
  std::vector<Scalar> azimuth_offset;  // phi_t - phi_0, unwrapped
  std::string lyapunov_note;
};

/// Conservation and monotonicity diagnostics over the stored samples.
template <typename Scalar>
DiagnosticsReport<Scalar> flow_diagnostics(const Trajectory<Scalar>& traj, const HermitianMatrix<Scalar>& g) {
  if (traj.empty()) throw ContractError("flow_diagnostics: empty trajectory");
  DiagnosticsReport<Scalar> r;
  r.n_samples = traj.size();
  const auto& first = traj.front();
  const Scalar det0 = first.eigenvalues.prod();
  const Scalar tr0 = first.eigenvalues.sum();
  const Scalar scale = std::max<Scalar>(Scalar(1), first.state.norm() * g.norm());
  for (const auto& s : traj.samples) {
    r.eigenvalue_drift = std::max(r.eigenvalue_drift, (s.eigenvalues - first.eigenvalues).cwiseAbs().maxCoeff());
    r.trace_drift = std::max(r.trace_drift, std::abs(s.state.trace() - tr0));
    r.determinant_drift = std::max(r.determinant_drift, std::abs(s.eigenvalues.prod() - det0) / std::max<Scalar>(Scalar(1), std::abs(det0)));
    r.times.push_back(s.t);
    r.trace_hg.push_back(s.trace_hg);
    r.trace_distance_sq.push_back(s.trace_distance_sq);
    r.commutator_norm_sq.push_back(s.commutator_norm_sq);
  }
  const Scalar allowance = Scalar(64) * std::numeric_limits<Scalar>::epsilon() * scale;
  r.trace_hg_nonincreasing = check_monotone(r.trace_hg, -1, allowance);
  r.trace_distance_nondecreasing = check_monotone(r.trace_distance_sq, +1, Scalar(2) * allowance);
  r.commutator_nonincreasing = check_monotone(r.commutator_norm_sq, -1, allowance * scale);
  r.initial_commutator_norm_sq = r.commutator_norm_sq.front();
  r.final_commutator_norm_sq = r.commutator_norm_sq.back();
  r.lyapunov_note =
      "d/dt tr(H_t G) = -lambda tr([G,H]^dagger [G,H]) <= 0, hence d/dt tr(H_t - G)^2 = +2 lambda tr([G,H]^dagger [G,H]) >= 0: "
      "tr(H_t G) is checked non-increasing and tr(H_t - G)^2 non-decreasing";

  if (g.dim() == 2 && !to_bloch(g).degenerate) {
    Scalar prev = 0, offset = 0;
    bool started = false;
    Scalar sxy = 0, sxx = 0;
    for (const auto& s : traj.samples) {
      const BlochDecomposition<Scalar> b = to_bloch_in_frame(s.state, g);
      if (b.degenerate || std::sin(b.theta) <= Scalar(1e-6)) continue;
      if (!started) {
        prev = b.phi;
        started = true;
      }
      Scalar delta = b.phi - prev;
      const Scalar pi = std::numbers::pi_v<Scalar>;
      while (delta > pi) delta -= 2 * pi;
      while (delta < -pi) delta += 2 * pi;
      offset += delta;
      prev = b.phi;
      r.azimuth_offset.push_back(offset);
      sxy += s.t * offset;
      sxx += s.t * s.t;
    }
    if (started && sxx > 0) r.azimuth_rate = sxy / sxx;
  }
  return r;
}

template <typename Scalar = double>
struct AntiSortingReport {
  bool converged{false};
  bool anti_sorted{false};
  Scalar time{0};
  Scalar final_commutator_norm{0};
  RealVector<Scalar> limit_diagonal;  // diagonal of H at convergence, G's basis order
  RealVector<Scalar> g_diagonal;
  std::vector<Eigen::Index> pairing;  // pairing[i]: rank (ascending) of H eigenvalue at G's i-th diagonal slot
};

struct AntiSortingOptions {
  double t_max{2000.0};
  double step_factor{0.05};  // dt = step_factor / (lambda |H0| |G|)
  double tolerance{1e-8};    // on the Frobenius norm of [H, G]
};

/// Integrates the flow with diagonal G until [H, G] vanishes and reports
/// whether the limiting diagonal of H is ordered opposite to G's diagonal,
/// the pairing that minimizes tr(HG).
template <typename Scalar>
AntiSortingReport<Scalar> anti_sorting_check(const HermitianMatrix<Scalar>& h0, const HermitianMatrix<Scalar>& g, Scalar lambda,
                                             const AntiSortingOptions& opt = {}) {
  detail::require_same_dim(h0, g, "anti_sorting_check");
  const Eigen::Index n = g.dim();
  if (n > 16) throw ContractError("anti_sorting_check: dimension above 16");
  if (!(lambda > 0)) throw ContractError("anti_sorting_check: lambda must be positive");
  const ComplexMatrix<Scalar> off = g.matrix() - ComplexMatrix<Scalar>(g.matrix().diagonal().asDiagonal());
  if (off.cwiseAbs().maxCoeff() > Scalar(kHermiticityTolerance)) throw ContractError("anti_sorting_check: G must be diagonal");
  RealVector<Scalar> gd = g.matrix().diagonal().real();
  {
    RealVector<Scalar> sorted = gd;
    std::sort(sorted.data(), sorted.data() + n);
    if (min_eigenvalue_gap(sorted) < Scalar(kDegeneracyThreshold)) throw ContractError("anti_sorting_check: G entries must be distinct");
  }
  if (is_degenerate(h0)) throw ContractError("anti_sorting_check: H0 is degenerate");

  const Scalar dt = Scalar(opt.step_factor) / (lambda * h0.norm() * g.norm());
  AntiSortingReport<Scalar> rep;
  rep.g_diagonal = gd;
  ComplexMatrix<Scalar> h = h0.matrix();
  const auto check_every = 100;
  long long step = 0;
  Scalar t = 0;
  Scalar comm = (h * g.matrix() - g.matrix() * h).norm();
  while (t < Scalar(opt.t_max)) {
    h = rk4_step<Scalar>(h, g.matrix(), lambda, FlowVariant::PureDoubleBracket, dt);
    t += dt;
    if (++step % check_every == 0) {
      comm = (h * g.matrix() - g.matrix() * h).norm();
      if (comm < Scalar(opt.tolerance)) break;
    }
  }
  comm = (h * g.matrix() - g.matrix() * h).norm();
  rep.time = t;
  rep.final_commutator_norm = comm;
  rep.converged = comm < Scalar(opt.tolerance);
  rep.limit_diagonal = h.diagonal().real();

  // Rank of each limiting diagonal entry, and of each G entry (descending).
  auto ranks = [n](const RealVector<Scalar>& x, bool ascending) {
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index(0));
    std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return ascending ? x(a) < x(b) : x(a) > x(b); });
    std::vector<Eigen::Index> rank(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r) rank[static_cast<std::size_t>(idx[static_cast<std::size_t>(r)])] = r;
    return rank;
  };
  const auto h_rank = ranks(rep.limit_diagonal, true);
  const auto g_rank = ranks(gd, false);
  rep.pairing = h_rank;
  rep.anti_sorted = rep.converged && h_rank == g_rank;
  return rep;
}

}  // namespace bracketflow

#endif  // BRACKETFLOW_BRACKET_FLOW_HPP
