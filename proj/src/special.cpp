#include "bracketflow/special.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace bracketflow {

double langevin_mean(double y) {
  if (std::isinf(y) && y > 0) return -1.0;
  if (std::abs(y) < 1e-6) return -y / 6.0 + y * y * y / 360.0;
  return 2.0 / y - 1.0 / std::tanh(y / 2.0);
}

double langevin_variance(double y) {
  // For density ~ exp(-a x): Var = 1/a^2 - 1/sinh^2(a), a = y/2.
  const double a = y / 2.0;
  if (std::abs(a) < 1e-3) {
    // 1/3 - a^2/15 + 2 a^4/189
    const double a2 = a * a;
    return 1.0 / 3.0 - a2 / 15.0 + 2.0 * a2 * a2 / 189.0;
  }
  if (std::isinf(a)) return 0.0;
  const double s = std::sinh(a);
  return 1.0 / (a * a) - (std::isinf(s) ? 0.0 : 1.0 / (s * s));
}

double exponential_x_cdf(double x, double a) {
  if (x <= -1.0) return 0.0;
  if (x >= 1.0) return 1.0;
  if (std::abs(a) < 1e-12) return (x + 1.0) / 2.0;
  // (e^{a} - e^{-a x}) / (e^{a} - e^{-a}) rewritten to avoid overflow.
  return -std::expm1(-a * (x + 1.0)) / -std::expm1(-2.0 * a);
}

double chi_square_survival(double statistic, double dof) {
  if (dof <= 0) throw std::invalid_argument("chi_square_survival: dof must be positive");
  if (statistic <= 0) return 1.0;
  return boost::math::gamma_q(dof / 2.0, statistic / 2.0);
}

ChiSquareResult chi_square_test(std::span<const double> observed, std::span<const double> expected, double min_expected) {
  if (observed.size() != expected.size() || observed.empty()) {
    throw std::invalid_argument("chi_square_test: size mismatch");
  }
  std::vector<double> obs, exp;
  double o_acc = 0, e_acc = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    o_acc += observed[i];
    e_acc += expected[i];
    if (e_acc >= min_expected) {
      obs.push_back(o_acc);
      exp.push_back(e_acc);
      o_acc = e_acc = 0;
    }
  }
  if (e_acc > 0 || o_acc > 0) {
    if (exp.empty()) {
      obs.push_back(o_acc);
      exp.push_back(e_acc);
    } else {
      obs.back() += o_acc;
      exp.back() += e_acc;
    }
  }
  ChiSquareResult r;
  r.merged_bins = exp.size();
  for (std::size_t i = 0; i < exp.size(); ++i) {
    const double d = obs[i] - exp[i];
    r.statistic += d * d / exp[i];
  }
  r.dof = static_cast<int>(exp.size()) - 1;
  r.p_value = r.dof > 0 ? chi_square_survival(r.statistic, r.dof) : 1.0;
  return r;
}

}  // namespace bracketflow
