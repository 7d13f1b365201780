#include "bracketflow/thermalization.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <thread>

#include <boost/random/normal_distribution.hpp>

namespace bracketflow {

const char* to_string(Interpretation i) {
  return i == Interpretation::CovariantIto ? "covariant" : "literal";
}

SdeParams::SdeParams(ReferenceFrame<double> f, double nu_, Interpretation interp) : frame(f), nu(nu_), interpretation(interp) {
  validate();
}

void SdeParams::validate() const {
  frame.validate();
  if (!(nu > 0) || !std::isfinite(nu)) throw ContractError("SdeParams: nu must be positive");
  if (!std::isfinite(frame.lambda)) throw ContractError("SdeParams: lambda must be finite for stochastic dynamics");
}

XStep sde_step_x(double x, const SdeParams& p, double dt, Noise noise) {
  const double omega = p.omega();
  const double curvature = p.interpretation == Interpretation::CovariantIto ? 4.0 : 2.0;
  const double one_minus = std::max(0.0, 1.0 - x * x);
  const double drift = -omega * one_minus - curvature * p.nu * x;
  const double sqdt = std::sqrt(dt);
  const double diffusion = std::sqrt(2.0 * p.nu * one_minus);
  XStep out{x + drift * dt + diffusion * sqdt * (noise.z1 + noise.z2), false};
  if (out.x > 1.0) {
    out.x = 1.0;
    out.clamped = true;
  } else if (out.x < -1.0) {
    out.x = -1.0;
    out.clamped = true;
  }
  return out;
}

SphereStep sde_step_spherical(double theta, double phi, const SdeParams& p, double dt, Noise noise) {
  constexpr double pi = std::numbers::pi;
  const double s = std::sin(theta);
  const double sqdt = std::sqrt(dt);
  const double amp = std::sqrt(2.0 * p.nu);
  double drift = p.omega() * s;
  if (p.interpretation == Interpretation::CovariantIto) drift += 2.0 * p.nu * std::cos(theta) / s;
  SphereStep out;
  out.theta = theta + drift * dt + amp * sqdt * (noise.z1 + noise.z2);
  out.phi = wrap_angle(phi - amp * sqdt * (noise.z1 - noise.z2) / s);
  const double lo = kPoleMargin, hi = pi - kPoleMargin;
  while (out.theta < lo || out.theta > hi) {
    out.theta = out.theta < lo ? 2.0 * lo - out.theta : 2.0 * hi - out.theta;
    ++out.reflections;
  }
  return out;
}

Histogram make_histogram(double lo, double hi, std::size_t bins) {
  Histogram h;
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + (hi - lo) * double(i) / double(bins);
  h.edges.back() = hi;
  h.counts.assign(bins, 0);
  return h;
}

void histogram_add(Histogram& h, double value) {
  const std::size_t bins = h.counts.size();
  const double lo = h.edges.front(), hi = h.edges.back();
  auto idx = static_cast<long long>(std::floor((value - lo) / (hi - lo) * double(bins)));
  idx = std::clamp<long long>(idx, 0, static_cast<long long>(bins) - 1);
  ++h.counts[static_cast<std::size_t>(idx)];
}

std::mt19937_64 path_stream(std::uint64_t seed, std::uint64_t path_index) {
  return std::mt19937_64(seed + path_index);
}

double recommended_dt(const SdeParams& p) {
  return 1e-3 / std::max(p.omega(), p.nu);
}

double relaxation_time(const SdeParams& p) {
  return 20.0 / std::max(p.omega(), p.nu);
}

namespace {

struct PathOutcome {
  double x{0};
  std::uint64_t reflections{0};
  std::uint64_t clamps{0};
};

long long step_count(double t_end, double dt) {
  return static_cast<long long>(std::ceil(t_end / dt - 1e-9));
}

// Runs one path; calls record(t, theta, phi, x) after each step when provided.
template <typename Recorder>
PathOutcome run_path(double theta0, double phi0, const SdeParams& p, double t_end, double dt, std::mt19937_64& rng, bool use_x,
                     Recorder&& record) {
  boost::random::normal_distribution<double> normal;
  PathOutcome out;
  const long long n = step_count(t_end, dt);
  double t = 0;
  if (use_x) {
    double x = std::cos(theta0);
    for (long long k = 1; k <= n; ++k) {
      const double t_next = k == n ? t_end : double(k) * dt;
      const Noise z{normal(rng), normal(rng)};
      const XStep s = sde_step_x(x, p, t_next - t, z);
      x = s.x;
      out.clamps += s.clamped;
      t = t_next;
      record(k, t, std::acos(x), phi0, x);
    }
    out.x = x;
  } else {
    double theta = std::clamp(theta0, kPoleMargin, std::numbers::pi - kPoleMargin);
    double phi = wrap_angle(phi0);
    for (long long k = 1; k <= n; ++k) {
      const double t_next = k == n ? t_end : double(k) * dt;
      const Noise z{normal(rng), normal(rng)};
      const SphereStep s = sde_step_spherical(theta, phi, p, t_next - t, z);
      theta = s.theta;
      phi = s.phi;
      out.reflections += static_cast<std::uint64_t>(s.reflections);
      t = t_next;
      record(k, t, theta, phi, std::cos(theta));
    }
    out.x = std::cos(theta);
  }
  return out;
}

void validate_run(double t_end, double dt) {
  if (!(dt > 0) || !std::isfinite(dt)) throw ContractError("simulate: dt must be positive");
  if (!(t_end >= 0) || !std::isfinite(t_end)) throw ContractError("simulate: t_end must be non-negative");
}

}  // namespace

std::vector<PathSample> simulate_path(double theta0, double phi0, const SdeParams& p, double t_end, double dt, std::uint64_t seed,
                                      std::uint64_t path_index, bool use_x, std::size_t record_every) {
  p.validate();
  validate_run(t_end, dt);
  if (record_every == 0) record_every = 1;
  std::vector<PathSample> samples;
  samples.push_back({0.0, theta0, wrap_angle(phi0), std::cos(theta0)});
  const long long n = step_count(t_end, dt);
  auto rng = path_stream(seed, path_index);
  run_path(theta0, phi0, p, t_end, dt, rng, use_x, [&](long long k, double t, double th, double ph, double x) {
    if (k % static_cast<long long>(record_every) == 0 || k == n) samples.push_back({t, th, ph, x});
  });
  return samples;
}

EnsembleStats simulate_ensemble(double theta0, double phi0, const SdeParams& p, double t_end, double dt, std::size_t n_paths,
                                std::uint64_t seed, const EnsembleOptions& opt) {
  p.validate();
  validate_run(t_end, dt);
  if (n_paths < 1) throw ContractError("simulate_ensemble: n_paths must be at least 1");
  if (opt.bins < 1) throw ContractError("simulate_ensemble: bins must be at least 1");

  std::vector<PathOutcome> outcomes(n_paths);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      auto rng = path_stream(seed, i);
      outcomes[i] = run_path(theta0, phi0, p, t_end, dt, rng, opt.use_x_formulation, [](long long, double, double, double, double) {});
    }
  };
  const unsigned workers = std::max(1u, std::min<unsigned>(opt.workers, static_cast<unsigned>(n_paths)));
  if (workers == 1) {
    work(0, n_paths);
  } else {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (n_paths + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t b = w * chunk, e = std::min(n_paths, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
  }

  EnsembleStats st;
  st.n_paths = n_paths;
  st.t_end = t_end;
  st.dt = dt;
  st.seed = seed;
  st.histogram = make_histogram(-1.0, 1.0, opt.bins);
  // Welford in path order.
  double mean = 0, m2 = 0;
  for (std::size_t i = 0; i < n_paths; ++i) {
    const double x = outcomes[i].x;
    const double delta = x - mean;
    mean += delta / double(i + 1);
    m2 += delta * (x - mean);
    histogram_add(st.histogram, x);
    st.reflections += outcomes[i].reflections;
    st.clamps += outcomes[i].clamps;
  }
  st.mean_cos_theta = mean;
  st.std_error = n_paths > 1 ? std::sqrt(m2 / double(n_paths - 1) / double(n_paths)) : 0.0;
  return st;
}

double equilibrium_x_quantile(double u, double a) {
  if (a < 1e-8) return 2.0 * u - 1.0;
  // -(1/a) ln(e^a - u (e^a - e^-a)) = -1 - ln(1 - u (1 - e^{-2a})) / a
  return std::clamp(-1.0 - std::log1p(u * std::expm1(-2.0 * a)) / a, -1.0, 1.0);
}

std::vector<SpherePoint> sample_equilibrium(const SdeParams& p, std::size_t n_samples, std::uint64_t seed) {
  p.frame.validate();
  if (n_samples < 1) throw ContractError("sample_equilibrium: n_samples must be at least 1");
  const double a = std::isinf(p.frame.lambda) ? std::numeric_limits<double>::infinity() : p.exponent();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<SpherePoint> out;
  out.reserve(n_samples);
  for (std::size_t i = 0; i < n_samples; ++i) {
    const double u = uniform(rng);
    const double x = std::isinf(a) ? -1.0 : equilibrium_x_quantile(u, a);
    const double phi = 2.0 * std::numbers::pi * uniform(rng);
    out.push_back({std::acos(x), wrap_angle(phi)});
  }
  return out;
}

ChiSquareResult equilibrium_chi_square(const Histogram& h, double a) {
  std::uint64_t total = 0;
  for (auto c : h.counts) total += c;
  std::vector<double> observed, expected;
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    observed.push_back(double(h.counts[i]));
    expected.push_back(double(total) * (exponential_x_cdf(h.edges[i + 1], a) - exponential_x_cdf(h.edges[i], a)));
  }
  return chi_square_test(observed, expected);
}

}  // namespace bracketflow
