#ifndef BRACKETFLOW_IO_HPP
#define BRACKETFLOW_IO_HPP

#include "bracketflow/bracket_flow.hpp"
#include "bracketflow/ensembles.hpp"
#include "bracketflow/fokker_planck.hpp"
#include "bracketflow/thermalization.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace bracketflow {

/// Shortest-safe round-trip text for a double: 17 significant digits.
std::string format_double(double x);

/// Hermitian matrix from a JSON literal. Accepted forms:
///   [[a, b], [c, d]]                    real entries
///   [[[re, im], [re, im]], ...]         complex entries as pairs
///   {"u": u, "nu": nu, "n": [x, y, z]}  Bloch data, (1/2)(u 1 + nu sigma.n)
///   {"u": u, "nu": nu, "theta": t, "phi": p}
/// Throws ContractError on malformed input.
HermitianMatrix<double> parse_matrix(const nlohmann::json& j);
HermitianMatrix<double> parse_matrix(const std::string& text);

/// Inverse of parse_matrix for the complex-pair form.
nlohmann::json matrix_to_json(const HermitianMatrix<double>& h);

/// Trajectory CSV: t, reH00, imH00, ..., eig1..eigN, trHG, trDistSq, commNormSq.
void write_trajectory_csv(std::ostream& os, const Trajectory<double>& traj);
nlohmann::json diagnostics_to_json(const DiagnosticsReport<double>& r);

/// Vector field CSV: theta, phi, dtheta, dphi.
void write_vector_field_csv(std::ostream& os, const std::vector<VectorFieldRow>& rows);

/// Ensemble summary {params, n_paths, seed, t_end, mean_cos_theta, std_error,
/// histogram: {edges, counts}, reflections, clamps}.
nlohmann::json ensemble_to_json(const EnsembleStats& st, const SdeParams& p);
void write_histogram_csv(std::ostream& os, const Histogram& h);

/// Per-path CSV rows path_id, t, theta, phi, x.
void write_paths_csv_header(std::ostream& os);
void write_path_rows(std::ostream& os, std::size_t path_id, const std::vector<PathSample>& path);

/// Density CSV: node, value. The sidecar records variable, measure, M, params.
void write_density_csv(std::ostream& os, const DensityGrid& g);
nlohmann::json density_sidecar(const DensityGrid& g, const SdeParams& p);

/// Averages CSV: T, quenched, annealed.
void write_averages_csv(std::ostream& os, const AverageCurve& c);

nlohmann::json frame_to_json(const ReferenceFrame<double>& f);
nlohmann::json sde_params_to_json(const SdeParams& p);

/// Writes text to path, creating parent directories.
void write_text_file(const std::filesystem::path& path, const std::string& text);
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

}  // namespace bracketflow

#endif  // BRACKETFLOW_IO_HPP
