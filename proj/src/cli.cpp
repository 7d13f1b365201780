#include "bracketflow/cli.hpp"

#include "bracketflow/io.hpp"
#include "bracketflow/verify.hpp"

#include "CLI11.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace bracketflow {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

constexpr std::uint64_t kDefaultSeed = 20240601;

struct Key {
  std::string name;
  json fallback;  // built-in default; its type decides how a flag is read
  std::string help;
};

/// Resolved key values of one command invocation.
class Settings {
 public:
  json values = json::object();

  const json& raw(const std::string& k) const { return values.at(k); }

  double num(const std::string& k) const {
    const json& j = raw(k);
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) {
      const std::string s = j.get<std::string>();
      if (s == "inf" || s == "infinity") return std::numeric_limits<double>::infinity();
    }
    throw ContractError("--" + k + " must be a number");
  }

  long long integer(const std::string& k, long long min_value) const {
    const double x = num(k);
    if (!std::isfinite(x) || x != std::floor(x) || x < double(min_value)) {
      throw ContractError("--" + k + " must be an integer >= " + std::to_string(min_value));
    }
    return static_cast<long long>(x);
  }

  std::string str(const std::string& k) const {
    const json& j = raw(k);
    if (j.is_string()) return j.get<std::string>();
    throw ContractError("--" + k + " must be a string");
  }

  bool flag(const std::string& k) const {
    const json& j = raw(k);
    if (j.is_boolean()) return j.get<bool>();
    if (j.is_number_integer() && (j.get<long long>() == 0 || j.get<long long>() == 1)) return j.get<long long>() == 1;
    if (j.is_string()) {
      const std::string s = j.get<std::string>();
      if (s == "true") return true;
      if (s == "false") return false;
    }
    throw ContractError("--" + k + " must be true or false");
  }

  std::string choice(const std::string& k, std::initializer_list<const char*> allowed) const {
    const std::string s = str(k);
    for (const char* a : allowed) {
      if (s == a) return s;
    }
    std::string list;
    for (const char* a : allowed) list += std::string(list.empty() ? "" : "|") + a;
    throw ContractError("--" + k + " must be one of " + list);
  }
};

struct Context {
  std::ostream& out;
  fs::path dir;
  std::uint64_t seed;

  void wrote(const fs::path& p) const { out << "wrote " << p.generic_string() << '\n'; }

  template <typename Writer>
  void csv(const std::string& name, Writer&& writer) const {
    std::ostringstream os;
    writer(os);
    write_text_file(dir / name, os.str());
    wrote(dir / name);
  }

  void json_file(const std::string& name, const json& j) const {
    write_json_file(dir / name, j);
    wrote(dir / name);
  }
};

using Runner = int (*)(const Settings&, const Context&);

struct Command {
  std::string name;
  std::string help;
  std::vector<Key> keys;
  Runner run;
};

std::vector<Key> frame_keys() {
  return {{"lambda", 10.0, "coupling lambda (\"inf\" allowed where noted)"},
          {"v", 0.0, "reference trace part v"},
          {"mu", 2.0, "reference Bloch radius mu"}};
}

ReferenceFrame<double> frame_of(const Settings& s) { return ReferenceFrame<double>(s.num("v"), s.num("mu"), s.num("lambda")); }

FlowVariant variant_of(const Settings& s) { return s.choice("variant", {"pure", "unitary"}) == "pure" ? FlowVariant::PureDoubleBracket : FlowVariant::UnitaryModified; }

HermitianMatrix<double> matrix_of(const json& j) { return j.is_string() ? parse_matrix(j.get<std::string>()) : parse_matrix(j); }

json params_echo(const Settings& s) {
  json j = s.values;
  j.erase("out");
  return j;
}

// ---------------------------------------------------------------- flow

int run_flow(const Settings& s, const Context& ctx) {
  const double lambda = s.num("lambda");
  if (!std::isfinite(lambda)) throw ContractError("--lambda must be finite for the flow");
  const HermitianMatrix<double> h0 = matrix_of(s.raw("h0"));
  HermitianMatrix<double> g = HermitianMatrix<double>::identity(h0.dim());
  if (s.raw("g").is_null()) {
    if (h0.dim() != 2) throw ContractError("--g is required when h0 is not 2 x 2");
    g = reference_matrix(frame_of(s));
  } else {
    g = matrix_of(s.raw("g"));
  }
  const FlowVariant variant = variant_of(s);
  const double t_end = s.num("t_end");
  const double dt = s.num("dt") > 0 ? s.num("dt") : default_time_step(h0, g, lambda);
  const auto sample_every = static_cast<int>(s.integer("sample_every", 1));

  const auto traj = integrate_flow(h0, g, lambda, variant, t_end, dt, sample_every);
  const auto rep = flow_diagnostics(traj, g);

  const double scale = std::max(1.0, traj.front().eigenvalues.cwiseAbs().maxCoeff());
  const bool isospectral = rep.eigenvalue_drift <= 1e-8 * scale;
  const bool trace_conserved = rep.trace_drift <= 1e-10 * scale;
  const bool monotone = rep.trace_hg_nonincreasing.holds;
  const bool passed = isospectral && trace_conserved && monotone;

  ctx.csv("trajectory.csv", [&](std::ostream& os) { write_trajectory_csv(os, traj); });
  json j;
  j["command"] = "flow";
  j["params"] = params_echo(s);
  j["h0"] = matrix_to_json(h0);
  j["g"] = matrix_to_json(g);
  j["dt"] = dt;
  j["diagnostics"] = diagnostics_to_json(rep);
  j["checks"] = {{"isospectral", {{"passed", isospectral}, {"eigenvalue_drift", rep.eigenvalue_drift}, {"tolerance", 1e-8 * scale}}},
                 {"trace_conserved", {{"passed", trace_conserved}, {"trace_drift", rep.trace_drift}, {"tolerance", 1e-10 * scale}}},
                 {"trace_hg_nonincreasing", {{"passed", monotone}}}};
  j["passed"] = passed;
  ctx.json_file("diagnostics.json", j);
  ctx.out << "eigenvalue drift " << format_double(rep.eigenvalue_drift) << ", trace drift " << format_double(rep.trace_drift)
          << ", tr(HG) non-increasing " << (monotone ? "yes" : "no") << '\n';
  if (rep.azimuth_rate) ctx.out << "azimuth rate " << format_double(*rep.azimuth_rate) << '\n';
  return passed ? kExitOk : kExitScienceFailure;
}

// ---------------------------------------------------------------- vectorfield

int run_vectorfield(const Settings& s, const Context& ctx) {
  const auto rows = vector_field_grid<double>(frame_of(s), s.num("nu"), variant_of(s), static_cast<int>(s.integer("n_theta", 2)),
                                              static_cast<int>(s.integer("n_phi", 1)));
  ctx.csv("vectorfield.csv", [&](std::ostream& os) { write_vector_field_csv(os, rows); });
  return kExitOk;
}

// ---------------------------------------------------------------- sde

// Mean of cos theta under exp(-a cos theta) d theta, the stationary law of the
// literal coordinate reading. The integrand extends to a smooth even periodic
// function, so the trapezoid rule on [0, pi] converges spectrally.
double literal_mean_cos(double a) {
  constexpr int n = 4000;
  double num = 0, den = 0;
  for (int i = 0; i <= n; ++i) {
    const double t = std::numbers::pi * i / n;
    const double w = (i == 0 || i == n ? 0.5 : 1.0) * std::exp(-a * (std::cos(t) + 1.0));
    num += w * std::cos(t);
    den += w;
  }
  return num / den;
}

int run_sde(const Settings& s, const Context& ctx) {
  const bool covariant = s.choice("interpretation", {"covariant", "literal"}) == "covariant";
  const SdeParams p(frame_of(s), s.num("nu"), covariant ? Interpretation::CovariantIto : Interpretation::LiteralCoordinate);
  const double dt = s.num("dt") > 0 ? s.num("dt") : recommended_dt(p);
  const double t_end = s.num("t_end") > 0 ? s.num("t_end") : relaxation_time(p);
  const double theta0 = s.num("theta0"), phi0 = s.num("phi0");
  EnsembleOptions opt;
  opt.use_x_formulation = s.choice("formulation", {"x", "spherical"}) == "x";
  opt.bins = static_cast<std::size_t>(s.integer("bins", 1));
  opt.workers = static_cast<unsigned>(s.integer("workers", 1));
  const auto n_paths = static_cast<std::size_t>(s.integer("n_paths", 2));
  const auto record_paths = static_cast<std::size_t>(s.integer("record_paths", 0));
  const auto record_every = static_cast<std::size_t>(s.integer("record_every", 1));

  const EnsembleStats st = simulate_ensemble(theta0, phi0, p, t_end, dt, n_paths, ctx.seed, opt);
  const double expected = covariant ? langevin_mean(2 * p.exponent()) : literal_mean_cos(p.exponent());
  const double z = st.std_error > 0 ? (st.mean_cos_theta - expected) / st.std_error : 0.0;
  const ChiSquareResult chi = equilibrium_chi_square(st.histogram, p.exponent());
  const bool passed = !covariant || std::abs(z) < 3.0;

  json j = ensemble_to_json(st, p);
  j["command"] = "sde";
  j["settings"] = params_echo(s);
  j["formulation"] = opt.use_x_formulation ? "x" : "spherical";
  j["closed_form_mean"] = langevin_mean(2 * p.exponent());
  j["expected_mean"] = expected;
  j["z_score"] = z;
  j["chi_square_vs_covariant_law"] = {{"statistic", chi.statistic}, {"dof", chi.dof}, {"p_value", chi.p_value}};
  j["interpretation_note"] =
      covariant ? "covariant Ito reading: stationary law exp(-a cos theta) against dV; expected_mean is the closed form"
                : "literal coordinate reading: stationary law exp(-a cos theta) against d theta, which differs from the closed form; "
                  "expected_mean is that law's mean and no pass/fail is applied";
  j["passed"] = passed;
  ctx.json_file("ensemble.json", j);
  ctx.csv("histogram.csv", [&](std::ostream& os) { write_histogram_csv(os, st.histogram); });
  ctx.csv("paths.csv", [&](std::ostream& os) {
    write_paths_csv_header(os);
    for (std::size_t i = 0; i < std::min(record_paths, n_paths); ++i) {
      write_path_rows(os, i, simulate_path(theta0, phi0, p, t_end, dt, ctx.seed, i, opt.use_x_formulation, record_every));
    }
  });
  ctx.out << "mean cos theta " << format_double(st.mean_cos_theta) << " +- " << format_double(st.std_error) << ", expected "
          << format_double(expected) << ", z " << format_double(z) << '\n';
  return passed ? kExitOk : kExitScienceFailure;
}

// ---------------------------------------------------------------- fp

int run_fp(const Settings& s, const Context& ctx) {
  const SdeParams p(frame_of(s), s.num("nu"));
  const auto m = static_cast<Eigen::Index>(s.integer("m", 5));
  const double t_end = s.num("t_end") > 0 ? s.num("t_end") : relaxation_time(p);
  const std::string scheme_name = s.choice("scheme", {"explicit", "cn"});
  const TimeScheme scheme = scheme_name == "explicit" ? TimeScheme::Explicit : TimeScheme::CrankNicolson;
  const std::string initial = s.choice("initial", {"bump", "stationary", "uniform"});
  const double a = p.exponent(), c = s.num("bump_center"), w = s.num("bump_width");
  if (!(w > 0)) throw ContractError("--bump_width must be positive");

  auto stationary = [a](double x) { return std::exp(-a * (x + 1.0)); };
  std::function<double(double)> f = stationary;
  if (initial == "bump") f = [c, w](double x) { return std::exp(-0.5 * (x - c) * (x - c) / (w * w)); };
  if (initial == "uniform") f = [](double) { return 1.0; };

  const DensityGrid rho0 = make_density(GridVariable::X, Measure::Coordinate, m, f);
  const FpEvolution ev = evolve_fp_x(rho0, p, t_end, s.num("dt"), scheme);
  const DensityGrid target = make_density(GridVariable::X, Measure::Coordinate, m, stationary);
  const double distance = (ev.density.values - target.values).cwiseAbs().maxCoeff();

  auto theta_residual = [&](Eigen::Index n) {
    return stationarity_residual(make_density(GridVariable::Theta, Measure::Coordinate, n, [a](double t) { return std::exp(-a * (std::cos(t) + 1.0)); }), p);
  };
  const double r1 = theta_residual(m), r2 = theta_residual(2 * m - 1);

  ctx.csv("density.csv", [&](std::ostream& os) { write_density_csv(os, ev.density); });
  json side = density_sidecar(ev.density, p);
  side["t"] = t_end;
  ctx.json_file("density.json", side);
  json j;
  j["command"] = "fp";
  j["settings"] = params_echo(s);
  j["params"] = sde_params_to_json(p);
  j["scheme"] = to_string(scheme);
  j["t_end"] = t_end;
  j["dt"] = ev.dt;
  j["steps"] = ev.steps;
  j["max_mass_error"] = ev.max_mass_error;
  j["min_value"] = ev.min_value;
  j["residual_x"] = stationarity_residual(ev.density, p);
  j["theta_residual"] = {{"M", m}, {"residual_M", r1}, {"residual_2M_minus_1", r2}, {"ratio", r1 / r2}};
  j["max_norm_distance_to_stationary"] = distance;
  j["mean_x"] = mean_x(ev.density);
  j["closed_form_mean"] = langevin_mean(2 * a);
  ctx.json_file("fp.json", j);
  ctx.out << "steps " << ev.steps << ", distance to stationary " << format_double(distance) << ", theta residual ratio "
          << format_double(r1 / r2) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- averages

int run_averages(const Settings& s, const Context& ctx) {
  ThermalParams base;
  const double lambda = s.flag("zero_noise") ? std::numeric_limits<double>::infinity() : s.num("lambda");
  base.frame = ReferenceFrame<double>(s.num("v"), s.num("mu"), lambda);
  base.nu = s.num("nu");
  base.u0 = s.num("u0");
  const auto n_points = static_cast<std::size_t>(s.integer("n_points", 2));
  const AverageCurve curve = sweep_temperature(base, s.num("t_min"), s.num("t_max"), n_points);

  auto at_beta = [&](double beta) {
    ThermalParams p = base;
    p.beta = beta;
    return json{{"quenched", quenched_average_G(p)}, {"annealed", annealed_average_G(p)}};
  };
  ctx.csv("averages.csv", [&](std::ostream& os) { write_averages_csv(os, curve); });
  json j;
  j["command"] = "averages";
  j["settings"] = params_echo(s);
  j["frame"] = frame_to_json(base.frame);
  j["mean_cos_theta"] = mean_cos_theta(base.frame.lambda, base.frame.mu);
  j["plateau_T0"] = at_beta(std::numeric_limits<double>::infinity());
  j["infinite_T"] = at_beta(0.0);
  ctx.json_file("averages.json", j);
  ctx.out << "T -> 0 plateaus: quenched " << format_double(j["plateau_T0"]["quenched"].get<double>()) << ", annealed "
          << format_double(j["plateau_T0"]["annealed"].get<double>()) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- verify

int run_verify(const Settings& s, const Context& ctx) {
  VerifyOptions o;
  o.mode = s.choice("mode", {"full", "quick"}) == "full" ? VerifyMode::Full : VerifyMode::Quick;
  o.tolerance_scale = s.num("tolerance_scale");
  if (!(o.tolerance_scale >= 0)) throw ContractError("--tolerance_scale must be non-negative");
  o.workers = static_cast<unsigned>(s.integer("workers", 1));
  o.seed = ctx.seed;
  int failed = 0;
  run_acceptance(o, [&](const CriterionResult& r) {
    ctx.out << format_result_line(r) << '\n' << std::flush;
    if (!r.passed) ++failed;
  });
  ctx.out << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " criteria failed") << '\n';
  return failed == 0 ? kExitOk : kExitScienceFailure;
}

std::vector<Command> commands() {
  auto with_frame = [](std::vector<Key> extra) {
    std::vector<Key> k = frame_keys();
    k.insert(k.end(), extra.begin(), extra.end());
    return k;
  };
  return {
      {"flow", "integrate the double-bracket flow (writes trajectory.csv, diagnostics.json)",
       with_frame({{"h0", json::parse("[[0,1],[1,0]]"), "initial Hermitian matrix as JSON"},
                   {"g", nullptr, "reference matrix as JSON (default: from v, mu along z)"},
                   {"t_end", 1.0, "final time"},
                   {"dt", 0.0, "RK4 step, 0 = automatic"},
                   {"variant", "pure", "pure | unitary"},
                   {"sample_every", 10, "store every n-th step"}}),
       run_flow},
      {"vectorfield", "tabulate the reduced vector field on the sphere (writes vectorfield.csv)",
       with_frame({{"nu", 1.0, "Bloch radius of H"},
                   {"variant", "unitary", "pure | unitary"},
                   {"n_theta", 19, "theta nodes over [0, pi]"},
                   {"n_phi", 36, "phi nodes over [0, 2 pi)"}}),
       run_vectorfield},
      {"sde", "simulate the spin-in-field SDE ensemble (writes ensemble.json, histogram.csv, paths.csv)",
       with_frame({{"nu", 1.0, "Bloch radius / noise strength"},
                   {"n_paths", 10000, "number of paths"},
                   {"t_end", 0.0, "final time, 0 = 20 / max(omega, nu)"},
                   {"dt", 0.0, "step, 0 = 1e-3 / max(omega, nu)"},
                   {"interpretation", "covariant", "covariant | literal"},
                   {"theta0", std::numbers::pi / 2, "initial polar angle"},
                   {"phi0", 0.0, "initial azimuth"},
                   {"bins", 20, "histogram bins in x"},
                   {"formulation", "x", "x | spherical"},
                   {"workers", 1, "threads"},
                   {"record_paths", 1, "number of paths written to paths.csv"},
                   {"record_every", 100, "steps between recorded samples"}}),
       run_sde},
      {"fp", "evolve the Fokker-Planck equation in x (writes density.csv, density.json, fp.json)",
       with_frame({{"nu", 1.0, "Bloch radius / noise strength"},
                   {"m", 401, "grid nodes (odd)"},
                   {"t_end", 0.0, "final time, 0 = 20 / max(omega, nu)"},
                   {"dt", 0.0, "step, 0 = automatic"},
                   {"scheme", "explicit", "explicit | cn"},
                   {"initial", "bump", "bump | stationary | uniform"},
                   {"bump_center", 0.9, "bump center in x"},
                   {"bump_width", 0.02, "bump width in x"}}),
       run_fp},
      {"averages", "quenched and annealed averages of G over temperature (writes averages.csv, averages.json)",
       with_frame({{"nu", 1.0, "Bloch radius of H"},
                   {"u0", 0.0, "trace part of H"},
                   {"t_min", 0.01, "lowest temperature"},
                   {"t_max", 10.0, "highest temperature"},
                   {"n_points", 200, "log-spaced temperatures"},
                   {"zero_noise", false, "use lambda = inf"}}),
       run_averages},
      {"verify", "run the acceptance criteria and print one line per criterion",
       {{"mode", "full", "full | quick"}, {"tolerance_scale", 1.0, "multiplies all tolerances"}, {"workers", 1, "threads for SDE runs"}},
       run_verify},
  };
}

// Flag text for a key whose default is not a string is read as JSON when it
// parses (numbers, booleans, matrices) and kept as text otherwise ("inf").
json flag_value(const Key& key, const std::string& text) {
  if (key.fallback.is_string()) return text;
  try {
    return json::parse(text);
  } catch (const json::parse_error&) {
    return text;
  }
}

json load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ContractError("cannot read config file " + path);
  json j;
  try {
    j = json::parse(f);
  } catch (const json::parse_error& e) {
    throw ContractError("config file " + path + " is not valid JSON: " + e.what());
  }
  if (!j.is_object()) throw ContractError("config file " + path + " must hold a JSON object");
  return j;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const std::vector<Command> cmds = commands();
  const std::vector<Key> common = {{"out", "./out", "output directory"}, {"seed", json(kDefaultSeed), "base random seed"}};

  CLI::App app{"Double-bracket flow, thermalization and ensemble averages", "bracketflow"};
  app.require_subcommand(1);
  std::map<std::string, std::map<std::string, std::string>> flag_text;
  std::map<std::string, std::map<std::string, CLI::Option*>> flag_opt;
  std::map<std::string, std::string> config_path;
  std::map<std::string, CLI::App*> subs;
  for (const Command& c : cmds) {
    CLI::App* sub = app.add_subcommand(c.name, c.help);
    subs[c.name] = sub;
    std::vector<Key> keys = c.keys;
    keys.insert(keys.end(), common.begin(), common.end());
    for (const Key& k : keys) {
      flag_opt[c.name][k.name] = sub->add_option("--" + k.name, flag_text[c.name][k.name], k.help + " [" + k.fallback.dump() + "]");
    }
    sub->add_option("--config", config_path[c.name], "JSON file of key/value settings (flags override it)");
  }

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  for (const Command& c : cmds) {
    if (!subs[c.name]->parsed()) continue;
    try {
      std::vector<Key> keys = c.keys;
      keys.insert(keys.end(), common.begin(), common.end());
      Settings s;
      for (const Key& k : keys) s.values[k.name] = k.fallback;
      if (!config_path[c.name].empty()) {
        const json config = load_config(config_path[c.name]);
        for (const auto& [name, value] : config.items()) {
          if (!s.values.contains(name)) throw ContractError("unknown key '" + name + "' in config for " + c.name);
          s.values[name] = value;
        }
      }
      for (const Key& k : keys) {
        if (flag_opt[c.name][k.name]->count() > 0) s.values[k.name] = flag_value(k, flag_text[c.name][k.name]);
      }
      const Context ctx{out, fs::path(s.str("out")), static_cast<std::uint64_t>(s.integer("seed", 0))};
      return c.run(s, ctx);
    } catch (const ContractError& e) {
      err << "error: " << e.what() << '\n';
      return kExitUsage;
    } catch (const StabilityError& e) {
      err << "unstable: " << e.what() << '\n';
      return kExitScienceFailure;
    } catch (const FlowInstabilityError& e) {
      err << "unstable: " << e.what() << '\n';
      return kExitScienceFailure;
    } catch (const std::exception& e) {
      err << "failed: " << e.what() << '\n';
      return kExitScienceFailure;
    }
  }
  return kExitUsage;
}

}  // namespace bracketflow
