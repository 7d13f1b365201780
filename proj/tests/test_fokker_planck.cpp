#include "bracketflow/bracket_flow.hpp"
#include "bracketflow/fokker_planck.hpp"

#include <gtest/gtest.h>

#include <numbers>

#include "oracles.hpp"

using namespace bracketflow;

namespace {

constexpr double kPi = std::numbers::pi;

SdeParams params_for(double lambda_mu, double nu = 1.0) {
  return SdeParams(ReferenceFrame<double>(0.0, 2.0, lambda_mu / 2.0), nu);
}

DensityGrid stationary_theta_grid(Eigen::Index m, double a) {
  return make_density(GridVariable::Theta, Measure::Coordinate, m, [a](double t) { return std::exp(-a * std::cos(t)); });
}

DensityGrid bump_x_grid(Eigen::Index m, double center, double width) {
  return make_density(GridVariable::X, Measure::Volume, m, [&](double x) {
    const double z = (x - center) / width;
    return std::exp(-0.5 * z * z);
  });
}

// Cumulative trapezoid integral of an x-grid density in dx, normalized to end at 1.
Eigen::VectorXd cumulative(const DensityGrid& g) {
  Eigen::VectorXd c(g.size());
  c(0) = 0;
  for (Eigen::Index i = 1; i < g.size(); ++i) c(i) = c(i - 1) + 0.5 * g.spacing() * (g.values(i) + g.values(i - 1));
  return c / c(g.size() - 1);
}

}  // namespace

TEST(Grid, NodesAndValidation) {
  const auto nodes = grid_nodes(GridVariable::X, 5);
  EXPECT_EQ(nodes(0), -1.0);
  EXPECT_EQ(nodes(2), 0.0);
  EXPECT_EQ(nodes(4), 1.0);
  EXPECT_EQ(grid_nodes(GridVariable::Theta, 3)(1), kPi / 2);
  EXPECT_THROW(grid_nodes(GridVariable::X, 4), ContractError);
  EXPECT_THROW(grid_nodes(GridVariable::X, 1), ContractError);
  EXPECT_THROW(make_density(GridVariable::X, Measure::Volume, 5, [](double) { return -1.0; }), ContractError);
}

TEST(Grid, NormalizationUnderEachMeasure) {
  for (auto var : {GridVariable::Theta, GridVariable::X}) {
    for (auto meas : {Measure::Coordinate, Measure::Volume}) {
      const auto g = make_density(var, meas, 101, [](double s) { return 1.0 + 0.5 * std::cos(s); });
      EXPECT_NEAR(total_mass(g), 1.0, 1e-12);
      EXPECT_TRUE((g.values.array() >= 0).all());
    }
  }
}

TEST(Grid, MeasureConversionPreservesMean) {
  const double a = 1.0;
  const auto vol = make_density(GridVariable::X, Measure::Volume, 201, [a](double x) { return std::exp(-a * x); });
  const auto coord = convert_measure(vol, Measure::Coordinate);
  EXPECT_NEAR(total_mass(coord), 1.0, 1e-12);
  EXPECT_NEAR(mean_x(coord), mean_x(vol), 1e-14);
  EXPECT_NEAR(mean_x(vol), -0.3130353, 1e-4);

  // Theta grid: a dV density re-expressed against d theta.
  const auto th = make_density(GridVariable::Theta, Measure::Volume, 401, [a](double t) { return std::exp(-a * std::cos(t)); });
  const auto th_coord = convert_measure(th, Measure::Coordinate);
  EXPECT_NEAR(total_mass(th_coord), 1.0, 1e-4);
  EXPECT_NEAR(mean_x(th_coord), -0.3130353, 1e-4);
  const auto back = convert_measure(th_coord, Measure::Volume);
  EXPECT_LT((back.values - th.values).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Stationary, NormalizedAgainstVolume) {
  for (double lambda_mu : {1e-6, 0.5, 2.0, 20.0, 200.0}) {
    const ReferenceFrame<double> frame(0.0, 2.0, lambda_mu / 2);
    const double z = sphere_integral([&](double t, double) { return stationary_density(t, frame); });
    EXPECT_NEAR(z, 1.0, 1e-8) << lambda_mu;
    // Independent Simpson in theta; phi integrates to 2 pi.
    const double s = oracle::simpson([&](double t) { return 0.25 * std::sin(t) * stationary_density(t, frame); }, 0, kPi, 20000) * 2 * kPi;
    EXPECT_NEAR(s, 1.0, 1e-10) << lambda_mu;
  }
}

TEST(Stationary, Limits) {
  const ReferenceFrame<double> tiny(0.0, 2.0, 1e-12);
  EXPECT_NEAR(stationary_density(0.3, tiny), 1 / kPi, 1e-10);
  const ReferenceFrame<double> frame(0.0, 2.0, 10.0);
  EXPECT_NEAR(stationary_density(kPi, frame) / stationary_density(0.0, frame) / std::exp(20.0), 1.0, 1e-12);
  EXPECT_NEAR(std::exp(20.0), 4.85165e8, 1e3);
}

TEST(CanonicalGeneral, MatchesStationaryDensity) {
  const ReferenceFrame<double> frame(0.7, 2.0, 1.3);
  const auto d = canonical_density_general([&](double t, double p) { return potential(t, p, frame); }, frame.lambda);
  double worst = 0;
  for (double t = 0; t <= kPi; t += 0.05) {
    for (double p : {0.0, 1.0, 4.0}) worst = std::max(worst, std::abs(d(t, p) / stationary_density(t, frame) - 1.0));
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(CanonicalGeneral, ConstantPotentialIsUniform) {
  const auto d = canonical_density_general([](double, double) { return 3.0; }, 2.0);
  EXPECT_NEAR(d(0.4, 1.0), 1 / kPi, 1e-12);
  EXPECT_NEAR(d.partition(), kPi * std::exp(-6.0), 1e-12);
}

TEST(CanonicalGeneral, PartitionFunction) {
  for (double v : {0.0, 1.5, -2.0}) {
    for (double lambda : {0.25, 1.0, 10.0}) {
      const ReferenceFrame<double> frame(v, 2.0, lambda);
      const double a = lambda;  // lambda mu / 2
      const auto d = canonical_density_general([&](double t, double p) { return potential(t, p, frame); }, lambda);
      const double exact = std::exp(-lambda * v / 2) * kPi * std::sinh(a) / a;
      EXPECT_NEAR(d.partition() / exact, 1.0, 1e-10) << "v=" << v << " lambda=" << lambda;
    }
  }
}

TEST(CanonicalGeneral, NonAxialPotentialIntegratesToOne) {
  auto g = [](double t, double p) { return 0.3 * std::sin(t) * std::cos(p) + 0.5 * std::cos(t); };
  const auto d = canonical_density_general(g, 2.0);
  EXPECT_NEAR(sphere_integral([&](double t, double p) { return d(t, p); }), 1.0, 1e-12);
}

TEST(CanonicalGeneral, Errors) {
  EXPECT_THROW(canonical_density_general([](double, double) { return 1.0; }, 0.0), ContractError);
  EXPECT_THROW(canonical_density_general([](double, double) { return std::nan(""); }, 1.0), ContractError);
}

TEST(OperatorTheta, SecondOrderConvergence) {
  const auto p = params_for(2.0);
  const double a = p.exponent();
  const double r101 = stationarity_residual(stationary_theta_grid(101, a), p);
  const double r201 = stationarity_residual(stationary_theta_grid(201, a), p);
  const double r401 = stationarity_residual(stationary_theta_grid(401, a), p);
  EXPECT_NEAR(r101 / r201, 4.0, 0.5);
  EXPECT_NEAR(r201 / r401, 4.0, 0.5);
  const auto g401 = stationary_theta_grid(401, a);
  EXPECT_LT(r401 / (g401.values.maxCoeff() * p.omega()), 1e-3);
}

TEST(OperatorTheta, UniformDensity) {
  // omega = 0: constants are annihilated exactly.
  const SdeParams still(ReferenceFrame<double>(0.0, 2.0, 1e-300), 1.0);
  const auto flat = make_density(GridVariable::Theta, Measure::Coordinate, 101, [](double) { return 1.0; });
  EXPECT_LT(stationarity_residual(flat, still), 1e-250);
  // omega > 0: residual is the drift term omega cos(theta) rho, max omega rho.
  const auto p = params_for(2.0);
  EXPECT_NEAR(stationarity_residual(flat, p) / (p.omega() * flat.values.maxCoeff()), 1.0, 1e-12);
}

TEST(OperatorTheta, Preconditions) {
  const auto p = params_for(2.0);
  EXPECT_THROW(fp_operator_theta(stationary_theta_grid(3, 1.0), p), ContractError);
  const auto vol = make_density(GridVariable::Theta, Measure::Volume, 11, [](double) { return 1.0; });
  EXPECT_THROW(fp_operator_theta(vol, p), ContractError);
  const auto xg = make_density(GridVariable::X, Measure::Volume, 11, [](double) { return 1.0; });
  EXPECT_THROW(fp_operator_theta(xg, p), ContractError);
}

TEST(OperatorX, AnnihilatesExponentialAndConservesMass) {
  const auto p = params_for(2.0);
  const double a = p.exponent();
  double prev = 0;
  for (Eigen::Index m : {101, 201, 401}) {
    const auto g = make_density(GridVariable::X, Measure::Volume, m, [a](double x) { return std::exp(-a * x); });
    const Eigen::VectorXd r = fp_operator_x(g, p);
    // Trapezoid-weighted sum of dp/dt is zero: the scheme is conservative.
    Eigen::VectorXd w = Eigen::VectorXd::Constant(m, g.spacing());
    w(0) = w(m - 1) = g.spacing() / 2;
    EXPECT_LT(std::abs(w.dot(r)), 1e-12);
    // Interior nodes are second order; the half cells at x = +-1 divide an
    // O(h^2) flux error by h/2 and converge at first order.
    const double res = r.segment(1, m - 2).cwiseAbs().maxCoeff();
    if (prev > 0) EXPECT_NEAR(prev / res, 4.0, 0.5);
    prev = res;
  }
}

TEST(Evolve, StationaryInitialStateUnchanged) {
  const auto p = params_for(2.0);
  const double a = p.exponent();
  const auto rho0 = make_density(GridVariable::X, Measure::Volume, 201, [a](double x) { return std::exp(-a * x); });
  const auto ev = evolve_fp_x(rho0, p, 2.0);
  EXPECT_LT((ev.density.values - rho0.values).cwiseAbs().maxCoeff() / rho0.values.maxCoeff(), 1e-3);
  EXPECT_LT(ev.max_mass_error, 1e-10);
}

TEST(Evolve, BumpRelaxesToEquilibrium) {
  const auto p = params_for(2.0);
  const auto ev = evolve_fp_x(bump_x_grid(201, 0.9, 0.02), p, 10.0);
  EXPECT_NEAR(mean_x(ev.density), 1.0 - 1.0 / std::tanh(1.0), 1e-3);
  EXPECT_LT(ev.max_mass_error, 1e-10);
  EXPECT_GT(ev.min_value, -1e-8);
  // Max-norm distance to the exact dV density (pi/2 per unit x).
  double worst = 0;
  for (Eigen::Index i = 0; i < ev.density.size(); ++i) {
    const double x = ev.density.nodes(i);
    worst = std::max(worst, std::abs(ev.density.values(i) - stationary_density(std::acos(x), p.frame)));
  }
  EXPECT_LT(worst, 2e-2);
}

TEST(Evolve, ZeroDriftGoesUniform) {
  const SdeParams p(ReferenceFrame<double>(0.0, 2.0, 1e-300), 1.0);
  const auto ev = evolve_fp_x(bump_x_grid(101, -0.5, 0.05), p, 6.0);
  const double uniform = 1.0 / kPi;  // p(x) w.r.t. dV with total volume pi
  EXPECT_LT((ev.density.values.array() - uniform).abs().maxCoeff(), 1e-3);
}

TEST(Evolve, CrankNicolsonMatchesExplicit) {
  const auto p = params_for(2.0);
  const auto rho0 = bump_x_grid(201, 0.3, 0.1);
  const auto ex = evolve_fp_x(rho0, p, 1.0, 0.0, TimeScheme::Explicit);
  const auto cn = evolve_fp_x(rho0, p, 1.0, 0.0, TimeScheme::CrankNicolson);
  EXPECT_GT(cn.dt, ex.dt);
  EXPECT_LT(cn.steps, ex.steps);
  EXPECT_LT((cn.density.values - ex.density.values).cwiseAbs().maxCoeff(), 1e-4);
  EXPECT_LT(cn.max_mass_error, 1e-10);
}

TEST(Evolve, CrankNicolsonHandlesStiffDiffusion) {
  // nu = 50: explicit needs dt < 1.6e-6; CN runs far above that bound.
  const SdeParams p(ReferenceFrame<double>(0.0, 2.0, 0.02), 50.0);
  const double a = p.exponent();
  const auto ev = evolve_fp_x(bump_x_grid(101, 0.0, 0.1), p, 0.5, 1e-3, TimeScheme::CrankNicolson);
  EXPECT_GT(1e-3, 100 * explicit_dt_limit(101, p));
  EXPECT_NEAR(mean_x(ev.density), oracle::mean_x_quadrature(a), 1e-3);
}

TEST(Evolve, StabilityAbort) {
  const auto p = params_for(2.0);
  const auto rho0 = bump_x_grid(201, 0.9, 0.02);
  EXPECT_THROW(evolve_fp_x(rho0, p, 1.0, 100 * explicit_dt_limit(201, p)), StabilityError);
  try {
    evolve_fp_x(rho0, p, 1.0, 100 * explicit_dt_limit(201, p));
  } catch (const StabilityError& e) {
    EXPECT_NE(std::string(e.what()).find("dt"), std::string::npos);
  }
}

TEST(Evolve, Preconditions) {
  const auto p = params_for(2.0);
  EXPECT_THROW(evolve_fp_x(stationary_theta_grid(11, 1.0), p, 1.0), ContractError);
  EXPECT_THROW(evolve_fp_x(bump_x_grid(11, 0, 0.5), p, -1.0), ContractError);
}

TEST(Triangle, FpMonteCarloAndClosedFormAgree) {
  // lambda mu = 2, M = 201, 10^4 paths. Monte Carlo is compared on the CDF
  // (binned density noise at 10^4 paths is ~5e-2, see the decisions ledger).
  const auto p = params_for(2.0);
  const double a = p.exponent();
  const auto fp = evolve_fp_x(bump_x_grid(201, 0.9, 0.02), p, 10.0);
  const auto mc = simulate_ensemble(kPi / 2, 0.0, p, relaxation_time(p), recommended_dt(p), 10000, 77);

  const Eigen::VectorXd fp_cdf = cumulative(fp.density);
  double fp_exact = 0, mc_exact = 0, fp_mc = 0, fp_exact_density = 0;
  std::uint64_t running = 0;
  const auto& h = mc.histogram;
  for (std::size_t b = 0; b + 1 < h.edges.size(); ++b) {
    running += h.counts[b];
    const double edge = h.edges[b + 1];
    const auto node = static_cast<Eigen::Index>(std::lround((edge + 1.0) / fp.density.spacing()));
    ASSERT_NEAR(fp.density.nodes(node), edge, 1e-12);
    const double emp = double(running) / double(mc.n_paths);
    const double exact = exponential_x_cdf(edge, a);
    fp_exact = std::max(fp_exact, std::abs(fp_cdf(node) - exact));
    mc_exact = std::max(mc_exact, std::abs(emp - exact));
    fp_mc = std::max(fp_mc, std::abs(fp_cdf(node) - emp));
  }
  for (Eigen::Index i = 0; i < fp.density.size(); ++i) {
    const double x = fp.density.nodes(i);
    fp_exact_density = std::max(fp_exact_density, std::abs(fp.density.values(i) - stationary_density(std::acos(x), p.frame)));
  }
  EXPECT_LT(fp_exact, 2e-2);
  EXPECT_LT(mc_exact, 2e-2);
  EXPECT_LT(fp_mc, 2e-2);
  EXPECT_LT(fp_exact_density, 2e-2);
}
