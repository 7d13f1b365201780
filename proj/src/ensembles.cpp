#include "bracketflow/ensembles.hpp"

#include "bracketflow/bracket_flow.hpp"
#include "bracketflow/jacobi.hpp"
#include "bracketflow/special.hpp"

#include <cmath>

namespace bracketflow {

void ThermalParams::validate() const {
  frame.validate();
  if (!(beta >= 0)) throw ContractError("ThermalParams: beta must be non-negative");
  if (!(nu > 0) || !std::isfinite(nu)) throw ContractError("ThermalParams: nu must be positive");
  if (!std::isfinite(u0)) throw ContractError("ThermalParams: u0 must be finite");
}

SdeParams ThermalParams::sde() const {
  SdeParams s;
  s.frame = frame;
  s.nu = nu;
  return s;
}

double mean_cos_theta(double lambda, double mu) {
  const double y = lambda * mu;
  if (!(y > 0)) throw ContractError("mean_cos_theta: lambda mu must be positive");
  return langevin_mean(y);
}

HermitianMatrix<double> mean_hamiltonian(const ThermalParams& p) {
  p.validate();
  const double c = mean_cos_theta(p.frame.lambda, p.frame.mu);
  Eigen::Vector2d d(0.5 * (p.u0 + p.nu * c), 0.5 * (p.u0 - p.nu * c));
  return HermitianMatrix<double>::diagonal(d);
}

double thermal_expectation(const HermitianMatrix<double>& o, const HermitianMatrix<double>& h, double beta) {
  detail::require_same_dim(o, h, "thermal_expectation");
  if (!(beta >= 0)) throw ContractError("thermal_expectation: beta must be non-negative");
  if (h.dim() == 2) {
    const BlochDecomposition<double> hb = to_bloch(h);
    // O = (1/2)(w 1 + rho sigma.p): w = tr O, rho p_k = tr(O sigma_k).
    const double w = o.trace();
    Eigen::Vector3d rp;
    for (int k = 0; k < 3; ++k) rp(k) = (o.matrix() * pauli<double>(k)).trace().real();
    const double polarization = hb.degenerate ? 0.0 : -std::tanh(0.5 * beta * hb.nu);
    return 0.5 * w + 0.5 * polarization * rp.dot(hb.n);
  }
  const Eigensystem<double> es = jacobi_eigensystem(h);
  const double e_min = es.values(0);
  double z = 0, acc = 0;
  for (Eigen::Index i = 0; i < es.values.size(); ++i) {
    const double wgt = beta == 0.0 ? 1.0 : std::exp(-beta * (es.values(i) - e_min));
    const auto v = es.vectors.col(i);
    acc += wgt * (v.adjoint() * o.matrix() * v)(0, 0).real();
    z += wgt;
  }
  return acc / z;
}

double quenched_average_G(const ThermalParams& p) {
  p.validate();
  const double c = mean_cos_theta(p.frame.lambda, p.frame.mu);
  return 0.5 * p.frame.mu * std::tanh(0.5 * p.beta * p.nu) * (-c) + 0.5 * p.frame.v;
}

double annealed_average_G(const ThermalParams& p) {
  p.validate();
  const double c = mean_cos_theta(p.frame.lambda, p.frame.mu);
  return 0.5 * p.frame.mu * std::tanh(0.5 * p.beta * p.nu * (-c)) + 0.5 * p.frame.v;
}

HermitianMatrix<double> hamiltonian_at(const ThermalParams& p, double theta, double phi) {
  const HermitianMatrix<double> local = from_bloch(p.u0, p.nu, unit_vector(theta, phi));
  if (p.frame.g == Eigen::Vector3d::UnitZ()) return local;
  const ComplexMatrix<double> v = frame_unitary<double>(p.frame.g);
  return HermitianMatrix<double>(v * local.matrix() * v.adjoint());
}

McEstimate quenched_average_mc(const HermitianMatrix<double>& o, const ThermalParams& p, std::size_t n_samples, std::uint64_t seed) {
  p.validate();
  if (o.dim() != 2) throw ContractError("quenched_average_mc: observable must be 2 x 2");
  const std::vector<SpherePoint> points = sample_equilibrium(p.sde(), n_samples, seed);
  double mean = 0, m2 = 0;
  std::size_t k = 0;
  for (const SpherePoint& pt : points) {
    const double value = thermal_expectation(o, hamiltonian_at(p, pt.theta, pt.phi), p.beta);
    ++k;
    const double delta = value - mean;
    mean += delta / double(k);
    m2 += delta * (value - mean);
  }
  McEstimate est{mean, 0.0};
  if (n_samples > 1) est.std_error = std::sqrt(m2 / double(n_samples - 1) / double(n_samples));
  return est;
}

namespace {

HermitianMatrix<double> hamiltonian_from_vector(double u0, double nu, const Eigen::Vector3d& m) {
  ComplexMatrix<double> h = ComplexMatrix<double>::Identity(2, 2) * (u0 / 2) + pauli_dot<double>(m) * (nu / 2);
  return HermitianMatrix<double>(h);
}

}  // namespace

McEstimate annealed_average_mc(const HermitianMatrix<double>& o, const ThermalParams& p, std::size_t n_samples, std::uint64_t seed,
                               MeanHamiltonianSource source) {
  p.validate();
  if (o.dim() != 2) throw ContractError("annealed_average_mc: observable must be 2 x 2");
  if (n_samples < 1) throw ContractError("annealed_average_mc: n_samples must be at least 1");
  if (source == MeanHamiltonianSource::ClosedForm) {
    HermitianMatrix<double> mean_h = mean_hamiltonian(p);
    if (p.frame.g != Eigen::Vector3d::UnitZ()) {
      const ComplexMatrix<double> v = frame_unitary<double>(p.frame.g);
      mean_h = HermitianMatrix<double>(v * mean_h.matrix() * v.adjoint());
    }
    return {thermal_expectation(o, mean_h, p.beta), 0.0};
  }

  // Sample mean and covariance of the lab-frame Bloch vector.
  const std::vector<SpherePoint> points = sample_equilibrium(p.sde(), n_samples, seed);
  const ComplexMatrix<double> v = frame_unitary<double>(p.frame.g);
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  Eigen::Matrix3d m2 = Eigen::Matrix3d::Zero();
  std::size_t k = 0;
  for (const SpherePoint& pt : points) {
    const HermitianMatrix<double> local = from_bloch(0.0, 1.0, unit_vector(pt.theta, pt.phi));
    const HermitianMatrix<double> lab(v * local.matrix() * v.adjoint());
    const Eigen::Vector3d n = to_bloch(lab).n;
    ++k;
    const Eigen::Vector3d delta = n - mean;
    mean += delta / double(k);
    m2 += delta * (n - mean).transpose();
  }
  auto f = [&](const Eigen::Vector3d& m) { return thermal_expectation(o, hamiltonian_from_vector(p.u0, p.nu, m), p.beta); };
  McEstimate est{f(mean), 0.0};
  if (n_samples > 1) {
    const Eigen::Matrix3d cov = m2 / double(n_samples - 1);
    Eigen::Vector3d grad;
    constexpr double h = 1e-6;
    for (int i = 0; i < 3; ++i) {
      Eigen::Vector3d e = Eigen::Vector3d::Zero();
      e(i) = h;
      grad(i) = (f(mean + e) - f(mean - e)) / (2 * h);
    }
    est.std_error = std::sqrt(std::max(0.0, grad.dot(cov * grad)) / double(n_samples));
  }
  return est;
}

AverageCurve sweep_temperature(const ThermalParams& base, double t_min, double t_max, std::size_t n_points) {
  base.validate();
  if (!(t_min > 0) || !(t_max > t_min) || !std::isfinite(t_max)) throw ContractError("sweep_temperature: need 0 < T_min < T_max");
  if (n_points < 2) throw ContractError("sweep_temperature: need at least 2 points");
  AverageCurve curve;
  const double ratio = std::log(t_max / t_min);
  for (std::size_t i = 0; i < n_points; ++i) {
    const double temperature = i + 1 == n_points ? t_max : t_min * std::exp(ratio * double(i) / double(n_points - 1));
    ThermalParams p = base;
    p.beta = 1.0 / temperature;
    curve.temperatures.push_back(temperature);
    curve.quenched.push_back(quenched_average_G(p));
    curve.annealed.push_back(annealed_average_G(p));
  }
  return curve;
}

}  // namespace bracketflow
