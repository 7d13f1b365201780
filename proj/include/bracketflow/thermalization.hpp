#ifndef BRACKETFLOW_THERMALIZATION_HPP
#define BRACKETFLOW_THERMALIZATION_HPP

#include "bracketflow/hermitian.hpp"
#include "bracketflow/special.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace bracketflow {

/// How the coordinate form of the spin-in-field SDE is read.
///
/// CovariantIto adds the curvature drift +2 nu cot(theta) dt to dtheta
/// (equivalently -2 nu x dt to dx), so the stationary law is exp(-a cos theta)
/// with respect to dV = (1/4) sin theta dtheta dphi. LiteralCoordinate takes
/// the coordinate equations verbatim; its stationary law is exp(-a cos theta)
/// with respect to dtheta.
enum class Interpretation { CovariantIto, LiteralCoordinate };

const char* to_string(Interpretation i);

struct SdeParams {
  ReferenceFrame<double> frame;
  double nu{1.0};
  Interpretation interpretation{Interpretation::CovariantIto};

  SdeParams() = default;
  SdeParams(ReferenceFrame<double> f, double nu_, Interpretation interp = Interpretation::CovariantIto);

  void validate() const;
  double omega() const { return frame.omega(nu); }
  /// a = lambda mu / 2, the exponent of the equilibrium density in x.
  double exponent() const { return frame.lambda * frame.mu / 2.0; }
};

/// Two independent standard normal draws for dW^1, dW^2.
struct Noise {
  double z1{0};
  double z2{0};
};

struct XStep {
  double x{0};
  bool clamped{false};
};

struct SphereStep {
  double theta{0};
  double phi{0};
  int reflections{0};
};

inline constexpr double kPoleMargin = 1e-6;

/// Euler-Maruyama step in x = cos theta:
///   dx = [-omega (1 - x^2) - c nu x] dt + sqrt(2 nu (1 - x^2)) (dW1 + dW2),
/// c = 4 (covariant) or 2 (literal). The result is clamped to [-1, 1].
XStep sde_step_x(double x, const SdeParams& params, double dt, Noise noise);

/// Euler-Maruyama step of the (theta, phi) equations
///   dtheta = omega sin theta dt + sqrt(2 nu) (dW1 + dW2)  [+ 2 nu cot theta dt]
///   dphi   = -(1 / sin theta) sqrt(2 nu) (dW1 - dW2)
/// with reflection at theta in {eps, pi - eps} and phi wrapped to [0, 2 pi).
SphereStep sde_step_spherical(double theta, double phi, const SdeParams& params, double dt, Noise noise);

struct PathSample {
  double t{0};
  double theta{0};
  double phi{0};
  double x{0};
};

struct Histogram {
  std::vector<double> edges;
  std::vector<std::uint64_t> counts;
};

Histogram make_histogram(double lo, double hi, std::size_t bins);
void histogram_add(Histogram& h, double value);

struct EnsembleStats {
  std::size_t n_paths{0};
  double t_end{0};
  double dt{0};
  double mean_cos_theta{0};
  double std_error{0};
  Histogram histogram;
  std::uint64_t seed{0};
  std::uint64_t reflections{0};
  std::uint64_t clamps{0};
};

struct EnsembleOptions {
  bool use_x_formulation{true};
  std::size_t bins{20};
  unsigned workers{1};
};

/// Per-path random stream; path i uses seed + i so results do not depend on
/// how paths are scheduled.
std::mt19937_64 path_stream(std::uint64_t seed, std::uint64_t path_index);

/// Recommended step 1e-3 / max(omega, nu).
double recommended_dt(const SdeParams& params);

/// Relaxation horizon 20 / max(omega, nu).
double relaxation_time(const SdeParams& params);

/// Single path, recorded every record_every steps (and at the end).
std::vector<PathSample> simulate_path(double theta0, double phi0, const SdeParams& params, double t_end, double dt, std::uint64_t seed,
                                      std::uint64_t path_index, bool use_x_formulation, std::size_t record_every);

/// n_paths independent paths from (theta0, phi0) to t_end; statistics of
/// cos theta at t_end reduced in path order.
EnsembleStats simulate_ensemble(double theta0, double phi0, const SdeParams& params, double t_end, double dt, std::size_t n_paths,
                                std::uint64_t seed, const EnsembleOptions& options = {});

struct SpherePoint {
  double theta{0};
  double phi{0};
};

/// Exact draws from the equilibrium density proportional to exp(-a cos theta)
/// against dV (x = cos theta by inverse CDF, phi uniform), in the G frame.
std::vector<SpherePoint> sample_equilibrium(const SdeParams& params, std::size_t n_samples, std::uint64_t seed);

/// Inverse CDF of x for density proportional to exp(-a x) on [-1, 1].
double equilibrium_x_quantile(double u, double a);

/// Chi-square goodness of fit of an x histogram against the density
/// proportional to exp(-a x) on [-1, 1].
ChiSquareResult equilibrium_chi_square(const Histogram& h, double a);

}  // namespace bracketflow

#endif  // BRACKETFLOW_THERMALIZATION_HPP
