#ifndef BRACKETFLOW_ENSEMBLES_HPP
#define BRACKETFLOW_ENSEMBLES_HPP

#include "bracketflow/hermitian.hpp"
#include "bracketflow/thermalization.hpp"

#include <cstdint>
#include <vector>

namespace bracketflow {

/// Inverse temperature, reference frame and the invariant sphere (u0, nu).
struct ThermalParams {
  double beta{1.0};
  ReferenceFrame<double> frame;
  double nu{1.0};
  double u0{0.0};

  void validate() const;
  SdeParams sde() const;
};

/// <cos theta>_lambda = 2/(lambda mu) - coth(lambda mu / 2).
double mean_cos_theta(double lambda, double mu);

/// Equilibrium mean Hamiltonian (1/2) diag(u0 + nu c, u0 - nu c) in the G basis,
/// c = <cos theta>_lambda.
HermitianMatrix<double> mean_hamiltonian(const ThermalParams& p);

/// tr(O e^{-beta H}) / tr(e^{-beta H}). Bloch closed form for 2 x 2,
/// Jacobi eigendecomposition otherwise.
double thermal_expectation(const HermitianMatrix<double>& o, const HermitianMatrix<double>& h, double beta);

/// Quenched average of G:
///   (1/2) mu tanh(beta nu / 2) (coth(lambda mu / 2) - 2/(lambda mu)) + v/2.
/// The printed form is the v = 0 case; v only adds the constant v/2.
double quenched_average_G(const ThermalParams& p);

/// Annealed average of G:
///   (1/2) mu tanh[(beta nu / 2)(coth(lambda mu / 2) - 2/(lambda mu))] + v/2.
double annealed_average_G(const ThermalParams& p);

struct McEstimate {
  double mean{0};
  double std_error{0};
};

/// Hamiltonian (1/2)(u0 + nu sigma.n) for a point given in G-frame angles,
/// expressed in the standard basis.
HermitianMatrix<double> hamiltonian_at(const ThermalParams& p, double theta, double phi);

/// Monte Carlo quenched average: equilibrium draws of H, thermal expectation
/// of O for each, then the sample mean. Deterministic given seed.
McEstimate quenched_average_mc(const HermitianMatrix<double>& o, const ThermalParams& p, std::size_t n_samples, std::uint64_t seed);

enum class MeanHamiltonianSource { ClosedForm, MonteCarlo };

/// Annealed average: thermal expectation of O under the mean Hamiltonian,
/// taken from the closed form (std_error 0) or estimated from n_samples
/// equilibrium draws (std_error by the delta method).
McEstimate annealed_average_mc(const HermitianMatrix<double>& o, const ThermalParams& p, std::size_t n_samples, std::uint64_t seed,
                               MeanHamiltonianSource source = MeanHamiltonianSource::ClosedForm);

struct AverageCurve {
  std::vector<double> temperatures;
  std::vector<double> quenched;
  std::vector<double> annealed;
};

/// Both closed forms on n_points log-spaced temperatures in [t_min, t_max].
AverageCurve sweep_temperature(const ThermalParams& base, double t_min, double t_max, std::size_t n_points);

}  // namespace bracketflow

#endif  // BRACKETFLOW_ENSEMBLES_HPP
