#include "bracketflow/fokker_planck.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>
#include <vector>

namespace bracketflow {

namespace {

constexpr double kPi = std::numbers::pi;

void require_valid(const DensityGrid& g) {
  if (g.nodes.size() != g.values.size()) throw ContractError("DensityGrid: nodes/values size mismatch");
  if (g.size() < 3 || g.size() % 2 == 0) throw ContractError("DensityGrid: M must be odd and at least 3");
}

// Trapezoid weights times the measure factor at each node.
Eigen::VectorXd quadrature_weights(const DensityGrid& g) {
  const Eigen::Index m = g.size();
  const double h = g.spacing();
  Eigen::VectorXd w = Eigen::VectorXd::Constant(m, h);
  w(0) = w(m - 1) = h / 2;
  if (g.measure == Measure::Volume) {
    if (g.variable == GridVariable::Theta) {
      w.array() *= (kPi / 2) * g.nodes.array().sin();
    } else {
      w *= kPi / 2;
    }
  }
  return w;
}

}  // namespace

const char* to_string(GridVariable v) { return v == GridVariable::Theta ? "theta" : "x"; }
const char* to_string(Measure m) { return m == Measure::Coordinate ? "coordinate" : "volume"; }
const char* to_string(TimeScheme s) { return s == TimeScheme::Explicit ? "explicit" : "crank_nicolson"; }

Eigen::VectorXd grid_nodes(GridVariable variable, Eigen::Index m) {
  if (m < 3 || m % 2 == 0) throw ContractError("grid_nodes: M must be odd and at least 3");
  const double lo = variable == GridVariable::Theta ? 0.0 : -1.0;
  const double hi = variable == GridVariable::Theta ? kPi : 1.0;
  Eigen::VectorXd nodes(m);
  for (Eigen::Index i = 0; i < m; ++i) nodes(i) = lo + (hi - lo) * double(i) / double(m - 1);
  nodes(m - 1) = hi;
  return nodes;
}

DensityGrid make_density(GridVariable variable, Measure measure, Eigen::Index m, const std::function<double(double)>& f) {
  DensityGrid g{variable, measure, grid_nodes(variable, m), Eigen::VectorXd(m)};
  for (Eigen::Index i = 0; i < m; ++i) g.values(i) = f(g.nodes(i));
  if (!g.values.allFinite() || (g.values.array() < 0).any()) throw ContractError("make_density: values must be finite and non-negative");
  normalize(g);
  return g;
}

double total_mass(const DensityGrid& g) {
  require_valid(g);
  return quadrature_weights(g).dot(g.values);
}

double mean_x(const DensityGrid& g) {
  require_valid(g);
  const Eigen::VectorXd w = quadrature_weights(g);
  const Eigen::VectorXd x = g.variable == GridVariable::Theta ? Eigen::VectorXd(g.nodes.array().cos()) : g.nodes;
  return w.cwiseProduct(x).dot(g.values) / w.dot(g.values);
}

void normalize(DensityGrid& g) {
  const double mass = total_mass(g);
  if (!(mass > 0)) throw ContractError("normalize: density has no mass");
  g.values /= mass;
}

DensityGrid convert_measure(const DensityGrid& g, Measure target) {
  require_valid(g);
  if (g.measure == target) return g;
  DensityGrid out = g;
  out.measure = target;
  if (g.variable == GridVariable::X) {
    // rho_dx = (pi/2) rho_dV
    out.values = target == Measure::Volume ? Eigen::VectorXd(g.values / (kPi / 2)) : Eigen::VectorXd(g.values * (kPi / 2));
    return out;
  }
  const Eigen::Index m = g.size();
  if (target == Measure::Coordinate) {
    out.values = g.values.array() * (kPi / 2) * g.nodes.array().sin();
  } else {
    for (Eigen::Index i = 1; i < m - 1; ++i) out.values(i) = g.values(i) / ((kPi / 2) * std::sin(g.nodes(i)));
    // Poles: 0/0, linear extrapolation from the interior.
    out.values(0) = std::max(0.0, 2 * out.values(1) - out.values(2));
    out.values(m - 1) = std::max(0.0, 2 * out.values(m - 2) - out.values(m - 3));
  }
  return out;
}

double stationary_density(double theta, const ReferenceFrame<double>& frame) {
  frame.validate();
  const double a = frame.lambda * frame.mu / 2;
  if (a == 0.0) return 1.0 / kPi;
  // (2a / (2 pi sinh a)) e^{-a cos theta} = 2a e^{-a (1 + cos theta)} / (pi (1 - e^{-2a}))
  return 2 * a * std::exp(-a * (1 + std::cos(theta))) / (kPi * -std::expm1(-2 * a));
}

double sphere_integral(const std::function<double(double, double)>& f, const SphereQuadrature& quad) {
  const Eigen::Index nt = quad.n_theta, np = quad.n_phi;
  if (nt < 3 || np < 1) throw ContractError("sphere_integral: resolution too small");
  const Eigen::Index intervals = nt - 1;
  const double h = kPi / double(intervals);
  // column(theta_i) = (1/4) sin(theta_i) * periodic trapezoid over phi
  Eigen::VectorXd column(nt);
  for (Eigen::Index i = 0; i < nt; ++i) {
    const double theta = i == intervals ? kPi : double(i) * h;
    double s = 0;
    for (Eigen::Index j = 0; j < np; ++j) {
      const double v = f(theta, 2 * kPi * double(j) / double(np));
      if (!std::isfinite(v)) throw ContractError("sphere_integral: non-finite integrand");
      s += v;
    }
    column(i) = 0.25 * std::sin(theta) * s * (2 * kPi / double(np));
  }
  // Romberg table over strides 1, 2, 4, ... that divide the interval count.
  std::vector<Eigen::Index> strides{1};
  while (intervals % (strides.back() * 2) == 0 && intervals / (strides.back() * 2) >= 2) strides.push_back(strides.back() * 2);
  std::vector<double> level;
  for (Eigen::Index stride : strides) {
    double s = 0.5 * (column(0) + column(intervals));
    for (Eigen::Index i = stride; i < intervals; i += stride) s += column(i);
    level.push_back(s * h * double(stride));
  }
  // level[0] is finest. Richardson: R_k = (4^k R_fine - R_coarse) / (4^k - 1).
  for (std::size_t k = 1; k < level.size(); ++k) {
    const double factor = std::pow(4.0, double(k));
    for (std::size_t i = 0; i + k < level.size(); ++i) level[i] = (factor * level[i] - level[i + 1]) / (factor - 1);
  }
  return level.front();
}

double SphereDensity::operator()(double theta, double phi) const {
  return std::exp(-lambda * (potential(theta, phi) - shift) - log_partition);
}

double SphereDensity::partition() const { return std::exp(log_partition - lambda * shift); }

SphereDensity canonical_density_general(std::function<double(double, double)> potential, double lambda, const SphereQuadrature& quad) {
  if (!(lambda > 0) || !std::isfinite(lambda)) throw ContractError("canonical_density_general: lambda must be positive and finite");
  SphereDensity d;
  d.potential = std::move(potential);
  d.lambda = lambda;
  double lo = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < quad.n_theta; ++i) {
    const double theta = kPi * double(i) / double(quad.n_theta - 1);
    for (Eigen::Index j = 0; j < quad.n_phi; ++j) {
      const double v = d.potential(theta, 2 * kPi * double(j) / double(quad.n_phi));
      if (!std::isfinite(v)) throw ContractError("canonical_density_general: non-finite potential");
      lo = std::min(lo, v);
    }
  }
  d.shift = lo;
  const double z = sphere_integral([&](double t, double p) { return std::exp(-lambda * (d.potential(t, p) - lo)); }, quad);
  d.log_partition = std::log(z);
  return d;
}

Eigen::VectorXd fp_operator_theta(const DensityGrid& rho, const SdeParams& params) {
  require_valid(rho);
  if (rho.variable != GridVariable::Theta) throw ContractError("fp_operator_theta: theta grid required");
  if (rho.measure != Measure::Coordinate) throw ContractError("fp_operator_theta: operator acts on coordinate-measure values");
  const Eigen::Index m = rho.size();
  if (m < 5) throw ContractError("fp_operator_theta: grid too coarse (M < 5)");
  const double h = rho.spacing();
  const double omega = params.omega();
  const double nu = params.nu;
  const Eigen::VectorXd& f = rho.values;
  Eigen::VectorXd out(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    // Stencils written in first differences so constants give exactly zero:
    // (-3, 4, -1) = 3 D01 - D12 and (2, -5, 4, -1) = -2 D01 + 3 D12 - D23.
    double d1, d2;
    if (i == 0) {
      d1 = (3 * (f(1) - f(0)) - (f(2) - f(1))) / (2 * h);
      d2 = (-2 * (f(1) - f(0)) + 3 * (f(2) - f(1)) - (f(3) - f(2))) / (h * h);
    } else if (i == m - 1) {
      d1 = (3 * (f(i) - f(i - 1)) - (f(i - 1) - f(i - 2))) / (2 * h);
      d2 = (-2 * (f(i - 1) - f(i)) + 3 * (f(i - 2) - f(i - 1)) - (f(i - 3) - f(i - 2))) / (h * h);
    } else {
      d1 = (f(i + 1) - f(i - 1)) / (2 * h);
      d2 = ((f(i + 1) - f(i)) - (f(i) - f(i - 1))) / (h * h);
    }
    const double theta = rho.nodes(i);
    out(i) = -omega * (std::cos(theta) * f(i) + std::sin(theta) * d1) + 2 * nu * d2;
  }
  return out;
}

namespace {

// dp/dt = L p with L tridiagonal: lower(i) couples p_{i-1}, upper(i) couples p_{i+1}.
struct Tridiagonal {
  Eigen::VectorXd lower, diag, upper;

  Eigen::VectorXd apply(const Eigen::VectorXd& p) const {
    const Eigen::Index m = diag.size();
    Eigen::VectorXd out = diag.cwiseProduct(p);
    for (Eigen::Index i = 1; i < m; ++i) out(i) += lower(i) * p(i - 1);
    for (Eigen::Index i = 0; i + 1 < m; ++i) out(i) += upper(i) * p(i + 1);
    return out;
  }
};

Tridiagonal x_flux_operator(const Eigen::VectorXd& x, const SdeParams& params) {
  const Eigen::Index m = x.size();
  const double h = x(1) - x(0);
  const double omega = params.omega(), nu = params.nu;
  auto drift = [&](double s) { return -omega * (1 - s * s) - 4 * nu * s; };
  auto diffusion = [&](double s) { return 2 * nu * std::max(0.0, 1 - s * s); };
  Eigen::VectorXd w = Eigen::VectorXd::Constant(m, h);
  w(0) = w(m - 1) = h / 2;
  // J_{i+1/2} = alpha_i p_i + beta_i p_{i+1}
  Eigen::VectorXd alpha(m - 1), beta(m - 1);
  for (Eigen::Index i = 0; i + 1 < m; ++i) {
    const double b = drift(0.5 * (x(i) + x(i + 1)));
    alpha(i) = b / 2 + diffusion(x(i)) / h;
    beta(i) = b / 2 - diffusion(x(i + 1)) / h;
  }
  Tridiagonal op{Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(m)};
  for (Eigen::Index i = 0; i < m; ++i) {
    if (i + 1 < m) {
      op.diag(i) -= alpha(i) / w(i);
      op.upper(i) = -beta(i) / w(i);
    }
    if (i > 0) {
      op.diag(i) += beta(i - 1) / w(i);
      op.lower(i) = alpha(i - 1) / w(i);
    }
  }
  return op;
}

// Solves (I - c L) y = r.
Eigen::VectorXd solve_shifted(const Tridiagonal& op, double c, const Eigen::VectorXd& r) {
  const Eigen::Index m = r.size();
  Eigen::VectorXd cp(m), dp(m);
  auto a = [&](Eigen::Index i) { return -c * op.lower(i); };
  auto b = [&](Eigen::Index i) { return 1 - c * op.diag(i); };
  auto u = [&](Eigen::Index i) { return -c * op.upper(i); };
  cp(0) = u(0) / b(0);
  dp(0) = r(0) / b(0);
  for (Eigen::Index i = 1; i < m; ++i) {
    const double den = b(i) - a(i) * cp(i - 1);
    cp(i) = i + 1 < m ? u(i) / den : 0.0;
    dp(i) = (r(i) - a(i) * dp(i - 1)) / den;
  }
  Eigen::VectorXd y(m);
  y(m - 1) = dp(m - 1);
  for (Eigen::Index i = m - 2; i >= 0; --i) y(i) = dp(i) - cp(i) * y(i + 1);
  return y;
}

}  // namespace

Eigen::VectorXd fp_operator_x(const DensityGrid& rho, const SdeParams& params) {
  require_valid(rho);
  if (rho.variable != GridVariable::X) throw ContractError("fp_operator_x: x grid required");
  return x_flux_operator(rho.nodes, params).apply(rho.values);
}

double stationarity_residual(const DensityGrid& rho, const SdeParams& params) {
  const Eigen::VectorXd r = rho.variable == GridVariable::Theta ? fp_operator_theta(rho, params) : fp_operator_x(rho, params);
  return r.cwiseAbs().maxCoeff();
}

double explicit_dt_limit(Eigen::Index m, const SdeParams& params) {
  const double h = 2.0 / double(m - 1);
  const double diffusive = 0.4 * h * h / (2 * params.nu);
  const double max_drift = std::abs(params.omega()) + 4 * params.nu;
  return std::min(diffusive, 0.5 * h / max_drift);
}

FpEvolution evolve_fp_x(const DensityGrid& rho0, const SdeParams& params, double t_end, double dt, TimeScheme scheme) {
  require_valid(rho0);
  params.validate();
  if (rho0.variable != GridVariable::X) throw ContractError("evolve_fp_x: x grid required");
  if (!(t_end >= 0) || !std::isfinite(t_end)) throw ContractError("evolve_fp_x: t_end must be non-negative");
  const Eigen::Index m = rho0.size();
  if (!(dt > 0)) {
    dt = explicit_dt_limit(m, params);
    if (scheme == TimeScheme::CrankNicolson) dt *= 10;
  }

  FpEvolution ev;
  ev.density = rho0;
  normalize(ev.density);
  ev.dt = dt;
  ev.min_value = ev.density.values.minCoeff();
  const Tridiagonal op = x_flux_operator(rho0.nodes, params);
  Eigen::VectorXd p = ev.density.values;
  const auto n = static_cast<long long>(std::ceil(t_end / dt - 1e-9));
  double t = 0;
  for (long long k = 1; k <= n; ++k) {
    const double t_next = k == n ? t_end : double(k) * dt;
    const double h = t_next - t;
    if (scheme == TimeScheme::Explicit) {
      p += h * op.apply(p);
    } else if (k <= 2) {
      // Rannacher start-up: backward Euler half steps damp the stiff modes
      // that plain Crank-Nicolson would carry as sign-flipping oscillations.
      p = solve_shifted(op, h / 2, solve_shifted(op, h / 2, p));
    } else {
      p = solve_shifted(op, h / 2, p + (h / 2) * op.apply(p));
    }
    t = t_next;
    const double lowest = p.minCoeff();
    ev.min_value = std::min(ev.min_value, lowest);
    if (lowest < -1e-8 || !p.allFinite()) {
      throw StabilityError("evolve_fp_x: density went negative (" + std::to_string(lowest) + ") at step " + std::to_string(k) +
                           "; dt = " + std::to_string(h) + " exceeds the stable step, try dt <= " +
                           std::to_string(explicit_dt_limit(m, params)));
    }
    ev.density.values = p;
    ev.max_mass_error = std::max(ev.max_mass_error, std::abs(total_mass(ev.density) - 1.0));
  }
  ev.steps = n;
  ev.density.values = p;
  normalize(ev.density);
  return ev;
}

}  // namespace bracketflow
