#ifndef BRACKETFLOW_FOKKER_PLANCK_HPP
#define BRACKETFLOW_FOKKER_PLANCK_HPP

#include "bracketflow/hermitian.hpp"
#include "bracketflow/thermalization.hpp"

#include <Eigen/Dense>

#include <functional>
#include <stdexcept>

namespace bracketflow {

enum class GridVariable { Theta, X };

/// Which measure the grid values are a density against.
///
/// Coordinate: d(theta) or dx. Volume: the sphere volume element
/// dV = (1/4) sin theta dtheta dphi, phi integrated out, so that on an x grid
/// dV = (pi/2) dx and on a theta grid dV = (pi/2) sin theta dtheta.
enum class Measure { Coordinate, Volume };

const char* to_string(GridVariable v);
const char* to_string(Measure m);

/// Density on a uniform grid over theta in [0, pi] or x in [-1, 1].
/// M >= 3 and odd so the midpoint is a node.
struct DensityGrid {
  GridVariable variable{GridVariable::X};
  Measure measure{Measure::Coordinate};
  Eigen::VectorXd nodes;
  Eigen::VectorXd values;

  Eigen::Index size() const { return nodes.size(); }
  double spacing() const { return nodes(1) - nodes(0); }
};

class StabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Eigen::VectorXd grid_nodes(GridVariable variable, Eigen::Index m);

/// Grid with values f(node), normalized under the declared measure.
DensityGrid make_density(GridVariable variable, Measure measure, Eigen::Index m, const std::function<double(double)>& f);

/// Trapezoid integral of the values against the declared measure.
double total_mass(const DensityGrid& grid);

/// Trapezoid mean of x = cos theta (or x) under the declared measure.
double mean_x(const DensityGrid& grid);

void normalize(DensityGrid& grid);

/// Same distribution, values re-expressed against another measure.
DensityGrid convert_measure(const DensityGrid& grid, Measure target);

/// Canonical equilibrium density
///   rho = lambda mu / (2 pi sinh(lambda mu / 2)) exp(-(lambda mu / 2) cos theta),
/// normalized against dV.
double stationary_density(double theta, const ReferenceFrame<double>& frame);

struct SphereQuadrature {
  Eigen::Index n_theta{721};
  Eigen::Index n_phi{72};
};

/// Integral of f(theta, phi) dV over the sphere. Periodic trapezoid in phi;
/// trapezoid in theta refined by Richardson extrapolation over the nested
/// sub-grids available in n_theta - 1 intervals.
double sphere_integral(const std::function<double(double, double)>& f, const SphereQuadrature& quad = {});

/// exp(-lambda G(theta, phi)) / Z with Z its dV integral.
struct SphereDensity {
  std::function<double(double, double)> potential;
  double lambda{0};
  double shift{0};      // min sampled potential, factored out of Z
  double log_partition{0};  // log of the dV integral of exp(-lambda G)

  double operator()(double theta, double phi) const;
  double partition() const;
};

SphereDensity canonical_density_general(std::function<double(double, double)> potential, double lambda, const SphereQuadrature& quad = {});

/// Literal theta-coordinate operator
///   -omega (cos theta + sin theta d_theta) rho + 2 nu d_theta^2 rho
/// with central differences inside and one-sided second-order stencils at the
/// end nodes. Requires a theta grid with M >= 5.
Eigen::VectorXd fp_operator_theta(const DensityGrid& rho, const SdeParams& params);

/// Covariant flux operator in x: d_t p = -d_x J,
///   J = [-omega (1 - x^2) - 4 nu x] p - d_x[2 nu (1 - x^2) p],
/// finite volumes on the nodes with zero flux at x = +-1.
Eigen::VectorXd fp_operator_x(const DensityGrid& rho, const SdeParams& params);

/// Max-norm of the operator matching the grid variable.
double stationarity_residual(const DensityGrid& rho, const SdeParams& params);

enum class TimeScheme { Explicit, CrankNicolson };

const char* to_string(TimeScheme s);

struct FpEvolution {
  DensityGrid density;
  long long steps{0};
  double dt{0};
  double max_mass_error{0};
  double min_value{0};
};

/// Stable explicit step bound 0.4 dx^2 / (2 nu), capped by the advective limit.
double explicit_dt_limit(Eigen::Index m, const SdeParams& params);

/// Evolves an x-grid density to t_end. dt <= 0 selects the automatic step
/// (the explicit bound, times 10 for Crank-Nicolson). Crank-Nicolson starts
/// with two steps' worth of backward Euler half steps.
/// Throws StabilityError when any value drops below -1e-8.
FpEvolution evolve_fp_x(const DensityGrid& rho0, const SdeParams& params, double t_end, double dt = 0.0,
                        TimeScheme scheme = TimeScheme::Explicit);

}  // namespace bracketflow

#endif  // BRACKETFLOW_FOKKER_PLANCK_HPP
