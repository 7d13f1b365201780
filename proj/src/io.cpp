#include "bracketflow/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>

namespace bracketflow {

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

namespace {

double number(const nlohmann::json& j, const char* what) {
  if (!j.is_number()) throw ContractError(std::string("parse_matrix: ") + what + " must be a number");
  return j.get<double>();
}

Complex<double> entry(const nlohmann::json& j) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2) return {number(j[0], "real part"), number(j[1], "imaginary part")};
  throw ContractError("parse_matrix: entries must be numbers or [re, im] pairs");
}

}  // namespace

HermitianMatrix<double> parse_matrix(const nlohmann::json& j) {
  if (j.is_object()) {
    for (const auto& [key, value] : j.items()) {
      if (key != "u" && key != "nu" && key != "n" && key != "theta" && key != "phi") {
        throw ContractError("parse_matrix: unknown Bloch key '" + key + "'");
      }
      (void)value;
    }
    if (!j.contains("nu")) throw ContractError("parse_matrix: Bloch literal needs 'nu'");
    const double u = j.contains("u") ? number(j["u"], "u") : 0.0;
    const double nu = number(j["nu"], "nu");
    Vector3<double> n;
    if (j.contains("n")) {
      if (j.contains("theta") || j.contains("phi")) throw ContractError("parse_matrix: give either n or theta/phi");
      const auto& a = j["n"];
      if (!a.is_array() || a.size() != 3) throw ContractError("parse_matrix: n must have three components");
      n = Vector3<double>(number(a[0], "n"), number(a[1], "n"), number(a[2], "n"));
    } else {
      if (!j.contains("theta")) throw ContractError("parse_matrix: Bloch literal needs n or theta");
      n = unit_vector(number(j["theta"], "theta"), j.contains("phi") ? number(j["phi"], "phi") : 0.0);
    }
    return from_bloch(u, nu, n);
  }
  if (!j.is_array() || j.empty()) throw ContractError("parse_matrix: expected a square array of rows or a Bloch object");
  const auto n = static_cast<Eigen::Index>(j.size());
  ComplexMatrix<double> m(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) throw ContractError("parse_matrix: matrix must be square");
    for (Eigen::Index c = 0; c < n; ++c) m(r, c) = entry(row[static_cast<std::size_t>(c)]);
  }
  return HermitianMatrix<double>(m);
}

HermitianMatrix<double> parse_matrix(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ContractError(std::string("parse_matrix: invalid JSON: ") + e.what());
  }
  return parse_matrix(j);
}

nlohmann::json matrix_to_json(const HermitianMatrix<double>& h) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < h.dim(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index c = 0; c < h.dim(); ++c) row.push_back({h(r, c).real(), h(r, c).imag()});
    rows.push_back(row);
  }
  return rows;
}

void write_trajectory_csv(std::ostream& os, const Trajectory<double>& traj) {
  if (traj.samples.empty()) throw ContractError("write_trajectory_csv: empty trajectory");
  const Eigen::Index n = traj.samples.front().state.dim();
  os << "t";
  for (Eigen::Index r = 0; r < n; ++r)
    for (Eigen::Index c = 0; c < n; ++c) os << ",reH" << r << c << ",imH" << r << c;
  for (Eigen::Index k = 1; k <= n; ++k) os << ",eig" << k;
  os << ",trHG,trDistSq,commNormSq\n";
  for (const auto& s : traj.samples) {
    os << format_double(s.t);
    for (Eigen::Index r = 0; r < n; ++r)
      for (Eigen::Index c = 0; c < n; ++c) os << ',' << format_double(s.state(r, c).real()) << ',' << format_double(s.state(r, c).imag());
    for (Eigen::Index k = 0; k < n; ++k) os << ',' << format_double(s.eigenvalues(k));
    os << ',' << format_double(s.trace_hg) << ',' << format_double(s.trace_distance_sq) << ',' << format_double(s.commutator_norm_sq)
       << '\n';
  }
}

namespace {

nlohmann::json monotonicity_to_json(const Monotonicity<double>& m) {
  return {{"holds", m.holds}, {"first_violation", m.first_violation}, {"worst_violation", m.worst_violation}};
}

}  // namespace

nlohmann::json diagnostics_to_json(const DiagnosticsReport<double>& r) {
  nlohmann::json j;
  j["n_samples"] = r.n_samples;
  j["eigenvalue_drift"] = r.eigenvalue_drift;
  j["trace_drift"] = r.trace_drift;
  j["determinant_drift"] = r.determinant_drift;
  j["trace_hg_nonincreasing"] = monotonicity_to_json(r.trace_hg_nonincreasing);
  j["trace_distance_nondecreasing"] = monotonicity_to_json(r.trace_distance_nondecreasing);
  j["commutator_nonincreasing"] = monotonicity_to_json(r.commutator_nonincreasing);
  j["initial_commutator_norm_sq"] = r.initial_commutator_norm_sq;
  j["final_commutator_norm_sq"] = r.final_commutator_norm_sq;
  j["azimuth_rate"] = r.azimuth_rate ? nlohmann::json(*r.azimuth_rate) : nlohmann::json(nullptr);
  j["lyapunov_note"] = r.lyapunov_note;
  return j;
}

void write_vector_field_csv(std::ostream& os, const std::vector<VectorFieldRow>& rows) {
  os << "theta,phi,dtheta,dphi\n";
  for (const auto& r : rows) {
    os << format_double(r.theta) << ',' << format_double(r.phi) << ',' << format_double(r.dtheta) << ',' << format_double(r.dphi) << '\n';
  }
}

nlohmann::json frame_to_json(const ReferenceFrame<double>& f) {
  return {{"v", f.v}, {"mu", f.mu}, {"lambda", std::isinf(f.lambda) ? nlohmann::json("inf") : nlohmann::json(f.lambda)},
          {"g", {f.g.x(), f.g.y(), f.g.z()}}};
}

nlohmann::json sde_params_to_json(const SdeParams& p) {
  nlohmann::json j = frame_to_json(p.frame);
  j["nu"] = p.nu;
  j["omega"] = p.omega();
  j["interpretation"] = to_string(p.interpretation);
  return j;
}

nlohmann::json ensemble_to_json(const EnsembleStats& st, const SdeParams& p) {
  nlohmann::json j;
  j["params"] = sde_params_to_json(p);
  j["n_paths"] = st.n_paths;
  j["seed"] = st.seed;
  j["t_end"] = st.t_end;
  j["dt"] = st.dt;
  j["mean_cos_theta"] = st.mean_cos_theta;
  j["std_error"] = st.std_error;
  j["histogram"] = {{"edges", st.histogram.edges}, {"counts", st.histogram.counts}};
  j["reflections"] = st.reflections;
  j["clamps"] = st.clamps;
  return j;
}

void write_histogram_csv(std::ostream& os, const Histogram& h) {
  os << "lo,hi,count\n";
  for (std::size_t i = 0; i < h.counts.size(); ++i) {
    os << format_double(h.edges[i]) << ',' << format_double(h.edges[i + 1]) << ',' << h.counts[i] << '\n';
  }
}

void write_paths_csv_header(std::ostream& os) { os << "path_id,t,theta,phi,x\n"; }

void write_path_rows(std::ostream& os, std::size_t path_id, const std::vector<PathSample>& path) {
  for (const auto& s : path) {
    os << path_id << ',' << format_double(s.t) << ',' << format_double(s.theta) << ',' << format_double(s.phi) << ',' << format_double(s.x)
       << '\n';
  }
}

void write_density_csv(std::ostream& os, const DensityGrid& g) {
  os << "node,value\n";
  for (Eigen::Index i = 0; i < g.size(); ++i) os << format_double(g.nodes(i)) << ',' << format_double(g.values(i)) << '\n';
}

nlohmann::json density_sidecar(const DensityGrid& g, const SdeParams& p) {
  return {{"variable", to_string(g.variable)}, {"measure", to_string(g.measure)}, {"M", g.size()}, {"params", sde_params_to_json(p)}};
}

void write_averages_csv(std::ostream& os, const AverageCurve& c) {
  os << "T,quenched,annealed\n";
  for (std::size_t i = 0; i < c.temperatures.size(); ++i) {
    os << format_double(c.temperatures[i]) << ',' << format_double(c.quenched[i]) << ',' << format_double(c.annealed[i]) << '\n';
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
  f << text;
  if (!f) throw std::runtime_error("failed writing " + path.string());
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) { write_text_file(path, j.dump(2) + "\n"); }

}  // namespace bracketflow
