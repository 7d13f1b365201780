#include "bracketflow/verify.hpp"

#include "bracketflow/bracket_flow.hpp"
#include "bracketflow/ensembles.hpp"
#include "bracketflow/fokker_planck.hpp"
#include "bracketflow/special.hpp"
#include "bracketflow/thermalization.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <sstream>

namespace bracketflow {

namespace {

using H = HermitianMatrix<double>;
constexpr double kPi = std::numbers::pi;

struct Check {
  bool ok{true};
  std::ostringstream detail;

  // Records "label=value (tol)" and folds the comparison into ok.
  void below(const char* label, double value, double limit) {
    const bool pass = value < limit;
    ok = ok && pass;
    sep();
    detail << label << '=' << short_num(value) << (pass ? " < " : " !< ") << short_num(limit);
  }
  void require(const char* label, bool pass) {
    ok = ok && pass;
    sep();
    detail << label << (pass ? " ok" : " FAILED");
  }
  void note(const std::string& text) {
    sep();
    detail << text;
  }

  static std::string short_num(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", x);
    return buf;
  }

 private:
  bool first{true};
  void sep() {
    if (!first) detail << "; ";
    first = false;
  }
};

H sigma(int k) { return H(pauli<double>(k)); }

H random_hermitian(Eigen::Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  ComplexMatrix<double> a(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    a(i, i) = u(rng);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      a(i, j) = Complex<double>(u(rng), u(rng));
      a(j, i) = std::conj(a(i, j));
    }
  }
  return H(a);
}

double max_entry(const ComplexMatrix<double>& a) { return a.cwiseAbs().maxCoeff(); }

// 1. Isospectrality of the RK4 integration.
void isospectrality(Check& c, const VerifyOptions& o, double s) {
  const auto traj = integrate_flow(sigma(0), sigma(2), 0.5, FlowVariant::PureDoubleBracket, 5.0, 5e-4, 1);
  c.below("2x2 eig drift", flow_diagnostics(traj, sigma(2)).eigenvalue_drift, 1e-9 * s);
  std::mt19937_64 rng(o.seed);
  const H h0 = random_hermitian(4, rng), g = random_hermitian(4, rng);
  const auto t4 = integrate_flow(h0, g, 1.0, FlowVariant::PureDoubleBracket, 5.0, default_time_step(h0, g, 1.0), 10);
  c.below("4x4 eig drift", flow_diagnostics(t4, g).eigenvalue_drift, 1e-7 * s);
}

// 2. Numeric trajectory against the explicit 2 x 2 solution.
void closed_form(Check& c, const VerifyOptions&, double s) {
  struct Case {
    H h0;
    double lambda, t_end;
  };
  const Case cases[] = {{sigma(0), 0.5, 10.0}, {from_bloch(0.4, 1.3, unit_vector(2.1, 0.8)), 0.6, 15.0}};
  double worst = 0, asym = 0;
  for (const Case& k : cases) {
    const auto traj = integrate_flow(k.h0, sigma(2), k.lambda, FlowVariant::PureDoubleBracket, k.t_end, 5e-4, 10);
    for (const auto& smp : traj.samples) {
      worst = std::max(worst, max_entry(smp.state.matrix() - closed_form_2x2(k.h0, sigma(2), k.lambda, smp.t, FlowVariant::PureDoubleBracket).matrix()));
    }
    const auto b = to_bloch(k.h0);
    const H limit = H::diagonal(Eigen::Vector2d(0.5 * (b.u - b.nu), 0.5 * (b.u + b.nu)));
    asym = std::max(asym, max_entry(traj.back().state.matrix() - limit.matrix()));
  }
  c.below("max |H_num - H_exact|", worst, 1e-6 * s);
  c.below("|H_T - diag limit|", asym, 1e-6 * s);
}

// 3. Commutator decay and the self-consistent Lyapunov statement.
void lyapunov(Check& c, const VerifyOptions&, double s) {
  const double lambda = 0.5, omega = 2.0;
  const auto traj = integrate_flow(sigma(0), sigma(2), lambda, FlowVariant::PureDoubleBracket, 10.0 / omega, 5e-4, 1);
  const auto rep = flow_diagnostics(traj, sigma(2));
  c.require("commutator monotone", rep.commutator_nonincreasing.holds && s > 0);
  c.below("||[H,G]||^2 ratio at 10/omega", rep.final_commutator_norm_sq / rep.initial_commutator_norm_sq, 1e-8 * s);
  c.require("tr(HG) non-increasing at every sample", rep.trace_hg_nonincreasing.holds && s > 0);
  const std::size_t mid = traj.size() / 2;
  const auto& a = traj.samples[mid - 1];
  const auto& b = traj.samples[mid + 1];
  const double fd = (b.trace_hg - a.trace_hg) / (b.t - a.t);
  const ComplexMatrix<double> x = Complex<double>(0, 1) * commutator(traj.samples[mid].state, sigma(2));
  const double predicted = -lambda * (x * x).trace().real();
  c.below("FD d/dt tr(HG) vs -lambda tr X^2 (rel)", std::abs(fd / predicted - 1.0), 1e-4 * s);
}

// 4. Metric/potential drift equals the reduced flow.
void gradient_identity(Check& c, const VerifyOptions& o, double s) {
  std::mt19937_64 rng(o.seed + 4);
  std::uniform_real_distribution<double> ang(1e-3, kPi - 1e-3), az(0, 2 * kPi), pos(0.05, 5), v(-2, 2);
  double worst = 0, worst_fd = 0, worst_order = 0;
  constexpr double h = 1e-5, eps = 2.220446049250313e-16;
  for (int i = 0; i < 1000; ++i) {
    const ReferenceFrame<double> frame(v(rng), pos(rng), pos(rng));
    const double theta = ang(rng), phi = az(rng), nu = pos(rng);
    const double omega = frame.omega(nu);
    const auto d = gradient_drift(theta, phi, frame, nu);
    worst = std::max(worst, std::max(std::abs(d.dtheta - omega * std::sin(theta)), std::abs(d.dphi)) / std::max(1.0, omega));

    // Central differences of the potential pushed through the inverse metric.
    auto fd_drift = [&](double step) {
      const double dg = (potential(theta + step, phi, frame) - potential(theta - step, phi, frame)) / (2 * step);
      return -0.5 * frame.lambda * nu * 4.0 * dg;
    };
    const double bound = 2 * frame.lambda * nu * (h * h * frame.mu / 12 + 4 * eps * (std::abs(frame.v) + frame.mu) / h);
    worst_fd = std::max(worst_fd, std::abs(fd_drift(h) - omega * std::sin(theta)) / bound);
    const double e1 = std::abs(fd_drift(2e-2) - omega * std::sin(theta));
    const double e2 = std::abs(fd_drift(1e-2) - omega * std::sin(theta));
    worst_order = std::max(worst_order, std::abs(e1 / e2 - 4.0));
    const double dphi_fd = (potential(theta, phi + h, frame) - potential(theta, phi - h, frame)) / (2 * h);
    worst_fd = std::max(worst_fd, std::abs(dphi_fd) / bound);
  }
  c.below("max |drift - (omega sin, 0)| / max(1, omega)", worst, 1e-10 * s);
  c.below("FD (h=1e-5) error / O(h^2)+roundoff bound", worst_fd, 1.0 * s);
  c.below("|FD error ratio h -> h/2 - 4|", worst_order, 0.05 * s);
}

// 5. Stationarity of the canonical density under the theta operator.
void fp_stationarity(Check& c, const VerifyOptions&, double s) {
  const SdeParams p(ReferenceFrame<double>(0.0, 2.0, 1.0), 1.0);
  auto residual = [&](Eigen::Index m) {
    const double a = p.exponent();
    return stationarity_residual(make_density(GridVariable::Theta, Measure::Coordinate, m, [a](double t) { return std::exp(-a * std::cos(t)); }),
                                 p);
  };
  const double r101 = residual(101), r201 = residual(201), r401 = residual(401);
  c.below("|ratio 101->201 - 4|", std::abs(r101 / r201 - 4.0), 0.5 * s);
  c.below("|ratio 201->401 - 4|", std::abs(r201 / r401 - 4.0), 0.5 * s);
  double worst = 0;
  for (double lambda_mu : {0.5, 2.0, 20.0}) {
    const ReferenceFrame<double> frame(0.0, 2.0, lambda_mu / 2);
    worst = std::max(worst, std::abs(sphere_integral([&](double t, double) { return stationary_density(t, frame); }) - 1.0));
  }
  c.below("|int rho dV - 1|", worst, 1e-8 * s);
}

// 6. SDE equilibrium against the closed-form mean and density.
void sde_equilibrium(Check& c, const VerifyOptions& o, double s) {
  const std::size_t n_paths = o.mode == VerifyMode::Full ? 10000 : 2000;
  c.note("n_paths=" + std::to_string(n_paths));
  EnsembleOptions opt;
  opt.workers = o.workers;
  for (double lambda_mu : {0.5, 2.0, 20.0}) {
    const SdeParams p(ReferenceFrame<double>(0.0, 2.0, lambda_mu / 2), 1.0);
    const auto st = simulate_ensemble(kPi / 2, 0.0, p, relaxation_time(p), recommended_dt(p), n_paths, o.seed + std::uint64_t(lambda_mu * 10), opt);
    const double z = (st.mean_cos_theta - langevin_mean(lambda_mu)) / st.std_error;
    const auto chi = equilibrium_chi_square(st.histogram, p.exponent());
    const std::string tag = "lm=" + Check::short_num(lambda_mu);
    c.below((tag + " |z|").c_str(), std::abs(z), 3.0 * s);
    // p > 1e-3 written as 1e-3 / p < 1 so the scale tightens it.
    c.below((tag + " chi2 1e-3/p").c_str(), 1e-3 / std::max(chi.p_value, 1e-300), 1.0 * s);
  }
}

// 7. Closed-form thermal averages at lambda = 10, mu = 2, nu = 1.
void thermal_averages(Check& c, const VerifyOptions&, double s) {
  auto params = [](double beta) {
    ThermalParams p;
    p.beta = beta;
    p.frame = ReferenceFrame<double>(0.0, 2.0, 10.0);
    p.nu = 1.0;
    return p;
  };
  const double q_plateau = quenched_average_G(params(1e6)), a_plateau = annealed_average_G(params(1e6));
  c.below("|quenched plateau - 0.9000000041|", std::abs(q_plateau - 0.9000000041), 1e-6 * s);
  c.require("quenched plateau < 1", q_plateau < 1.0);
  c.below("|annealed plateau - 1|", std::abs(a_plateau - 1.0), 1e-6 * s);
  c.below("|Q(0) - A(0)|", std::abs(quenched_average_G(params(0)) - annealed_average_G(params(0))), 1e-15 * s);
  const double h = 1e-6;
  const double dq = (quenched_average_G(params(h)) - quenched_average_G(params(0))) / h;
  const double da = (annealed_average_G(params(h)) - annealed_average_G(params(0))) / h;
  c.below("|dQ/dbeta / dA/dbeta - 1| at 0", std::abs(dq / da - 1.0), 1e-6 * s);
}

// 8. Quenched Monte Carlo against the closed form.
void quenched_mc(Check& c, const VerifyOptions& o, double s) {
  std::mt19937_64 rng(o.seed + 8);
  std::uniform_real_distribution<double> beta(0.1, 10), lambda(0.1, 10), mu(0.5, 3), nu(0.2, 3);
  double worst = 0;
  for (int i = 0; i < 12; ++i) {
    ThermalParams p;
    p.beta = beta(rng);
    p.frame = ReferenceFrame<double>(0.0, mu(rng), lambda(rng));
    p.nu = nu(rng);
    const auto est = quenched_average_mc(reference_matrix(p.frame), p, 100000, o.seed + 100 + std::uint64_t(i));
    worst = std::max(worst, std::abs(est.mean - quenched_average_G(p)) / est.std_error);
  }
  c.below("max |MC - closed| / SE over 12 tuples", worst, 3.0 * s);
}

// 9. Unitary-modified flow.
void unitary_flow(Check& c, const VerifyOptions&, double s) {
  const double mu = 2.0;
  const auto traj = integrate_flow(from_bloch(0.0, 2.0, unit_vector(1.0, 0.5)), sigma(2), 0.25, FlowVariant::UnitaryModified, 4.0, 5e-4, 20);
  const auto rep = flow_diagnostics(traj, sigma(2));
  c.below("eig drift", rep.eigenvalue_drift, 1e-9 * s);
  double worst = 0;
  std::size_t k = 0;
  for (const auto& smp : traj.samples) {
    const auto b = to_bloch(smp.state);
    if (std::sin(b.theta) <= 1e-6) continue;
    worst = std::max(worst, std::abs(rep.azimuth_offset.at(k++) - mu * smp.t));
  }
  c.below("max |phi_t - phi_0 - mu t|", worst, 1e-6 * s);
  const auto rows = vector_field_grid(ReferenceFrame<double>(0.0, mu, 10.0), 1.0, FlowVariant::UnitaryModified, 19, 36);
  double dev = 0;
  for (const auto& r : rows) dev = std::max(dev, std::abs(r.dphi - mu));
  c.below("vector field max |dphi - mu|", dev, 1e-15 * s);
}

// Minimal tr(HG) pairing by enumeration: H eigenvalues placed on G's slots.
std::vector<double> brute_force_pairing(std::vector<double> h, const Eigen::VectorXd& g) {
  std::sort(h.begin(), h.end());
  std::vector<double> best;
  double best_value = std::numeric_limits<double>::infinity();
  do {
    double value = 0;
    for (std::size_t i = 0; i < h.size(); ++i) value += h[i] * g(Eigen::Index(i));
    if (value < best_value) {
      best_value = value;
      best = h;
    }
  } while (std::next_permutation(h.begin(), h.end()));
  return best;
}

// 10. Anti-sorting for N = 3, 4.
void anti_sorting(Check& c, const VerifyOptions& o, double s) {
  double worst = 0;
  int converged = 0, total = 0;
  for (int n : {3, 4}) {
    for (std::uint64_t k = 0; k < 10; ++k) {
      std::mt19937_64 rng(o.seed + 1000 * std::uint64_t(n) + k);
      const H h0 = random_hermitian(n, rng);
      std::uniform_real_distribution<double> u(-2, 2);
      Eigen::VectorXd gd(n);
      for (int i = 0; i < n; ++i) gd(i) = u(rng);
      const auto rep = anti_sorting_check(h0, H::diagonal(gd), 1.0);
      ++total;
      if (!rep.converged || !rep.anti_sorted) continue;
      ++converged;
      const auto eig = eigenvalues(h0);
      const auto best = brute_force_pairing(std::vector<double>(eig.data(), eig.data() + n), gd);
      for (int i = 0; i < n; ++i) worst = std::max(worst, std::abs(rep.limit_diagonal(i) - best[std::size_t(i)]));
    }
  }
  c.require(("converged and anti-sorted " + std::to_string(converged) + "/" + std::to_string(total)).c_str(), converged == total);
  c.below("max |diag - brute force|", worst, 1e-6 * s);
}

struct CriterionDef {
  const char* name;
  double time_limit;
  void (*run)(Check&, const VerifyOptions&, double);
};

const CriterionDef kCriteria[kCriterionCount] = {
    {"isospectrality", 1.0, isospectrality},
    {"closed-form agreement", 1.0, closed_form},
    {"commutator decay and Lyapunov", 0.0, lyapunov},
    {"gradient-flow identity", 0.0, gradient_identity},
    {"FP stationarity", 5.0, fp_stationarity},
    {"SDE equilibrium", 60.0, sde_equilibrium},
    {"thermal-average closed forms", 1.0, thermal_averages},
    {"quenched MC vs closed form", 30.0, quenched_mc},
    {"unitary-modified flow", 0.0, unitary_flow},
    {"N-dimensional anti-sorting", 10.0, anti_sorting},
};

}  // namespace

CriterionResult run_criterion(int id, const VerifyOptions& options) {
  if (id < 1 || id > kCriterionCount) throw ContractError("run_criterion: id must be in 1..10");
  const CriterionDef& def = kCriteria[id - 1];
  CriterionResult r;
  r.id = id;
  r.name = def.name;
  r.time_limit = def.time_limit;
  Check check;
  const auto start = std::chrono::steady_clock::now();
  try {
    def.run(check, options, options.tolerance_scale);
  } catch (const std::exception& e) {
    check.require((std::string("exception: ") + e.what()).c_str(), false);
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.within_time = r.time_limit <= 0 || r.seconds < r.time_limit;
  r.passed = check.ok && r.within_time;
  r.detail = check.detail.str();
  return r;
}

std::vector<CriterionResult> run_acceptance(const VerifyOptions& options, const std::function<void(const CriterionResult&)>& on_result) {
  std::vector<int> ids = options.only;
  if (ids.empty()) {
    for (int i = 1; i <= kCriterionCount; ++i) ids.push_back(i);
  }
  std::vector<CriterionResult> results;
  for (int id : ids) {
    results.push_back(run_criterion(id, options));
    if (on_result) on_result(results.back());
  }
  return results;
}

std::string format_result_line(const CriterionResult& r) {
  char head[160];
  if (r.time_limit > 0) {
    std::snprintf(head, sizeof head, "[%s] %2d %-32s (%.2f s / %g s%s)", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(), r.seconds,
                  r.time_limit, r.within_time ? "" : " EXCEEDED");
  } else {
    std::snprintf(head, sizeof head, "[%s] %2d %-32s (%.2f s)", r.passed ? "PASS" : "FAIL", r.id, r.name.c_str(), r.seconds);
  }
  return std::string(head) + ": " + r.detail;
}

}  // namespace bracketflow
