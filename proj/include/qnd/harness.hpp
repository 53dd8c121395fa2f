#pragma once

// Figure reproduction: experiment specs in, CSV/JSON plot data plus a
// provenance manifest out.

#include "qnd/montecarlo.hpp"
#include "qnd/physics.hpp"
#include "qnd/stats.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace qnd {

/// Representative sweep abscissa up to the experiment's maximum coupling.
inline const std::vector<double> kDefaultKappaGrid{0.0, 0.15, 0.3, 0.45, 0.62};

struct ExperimentSpec {
  std::string name;
  std::optional<std::filesystem::path> physics_sheet;
  SequenceConfig sequence;
  std::vector<double> kappa_grid;   // exclusive with photon_grid
  std::vector<double> photon_grid;  // N_L values mapped through the sheet
  std::filesystem::path outputs = "out";
  BinningOptions binning;
  int bootstrap_resamples = 1000;
};

/// JSON layout:
///   { "name": "...", "physics_sheet": "yb171.json",
///     "sequence": { "mode": "qnd", "kappa_nominal": 0.62, "shots": 2600,
///                   "atom_fluctuation": false, "sigmaJ_over_J": 0.07,
///                   "eta": 1.0, "basis": "y", "seed": 1 },
///     "kappa_grid": [...] | "photon_grid": [...],
///     "outputs": "out", "n_bins": 21, "half_range_sigmas": 2.5,
///     "bin_weighting": "count" | "uniform", "bootstrap_resamples": 1000 }
/// A relative physics_sheet resolves against `base_dir`; outputs is taken
/// as given. Throws ConfigError.
ExperimentSpec parse_spec(std::string_view json_text, const std::filesystem::path& base_dir = {});
ExperimentSpec load_spec(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentSpec& spec);

/// The sweep abscissa: kappa_grid, or |kappa| for each photon_grid entry via
/// the physics sheet, or kDefaultKappaGrid.
std::vector<double> resolve_kappa_grid(const ExperimentSpec& spec);

struct KappaReport {
  double photons = 0.0;
  DerivedCoupling coupling;
  double kappa_roundtrip = 0.0;     // kappa_from_angle(phi), 0 without photons
  double consistency_residual = 0.0;  // |phi - (kappa/2) sqrt(J/S)|
};

KappaReport kappa_report(const PhysicsSheet& sheet, double photons);
nlohmann::json to_json(const KappaReport& report);
std::string to_text(const KappaReport& report);

enum class FigureId { JointY, JointZ, VarianceSweep, ConditionalSweep };
std::string to_string(FigureId id);

struct FigureBundle {
  FigureId figure_id = FigureId::JointY;
  std::vector<std::filesystem::path> data_files;
  std::vector<std::filesystem::path> theory_files;
  std::filesystem::path manifest_path;
  nlohmann::json manifest;
  // Comparisons of simulated points with theory at 3 SE.
  std::vector<std::string> check_failures;
  bool check_passed() const { return check_failures.empty(); }
};

struct RunOptions {
  unsigned threads = 1;
};

/// Joint (s1, s2) scatter for three panels: (a) no atoms, (b) atoms in the
/// y basis, (c) atoms in the z basis, plus a summary JSON.
FigureBundle cmd_joint(const ExperimentSpec& spec, const RunOptions& options = {});

/// Variance sweep over the kappa grid for one mode, or both when `mode` is
/// empty, plus a closed-form theory table.
FigureBundle cmd_variance_sweep(const ExperimentSpec& spec,
                                std::optional<SequenceMode> mode = std::nullopt,
                                const RunOptions& options = {});

/// Conditional-variance sweep (QND condition) with squeezing in dB and a
/// closed-form theory table.
FigureBundle cmd_conditional_sweep(const ExperimentSpec& spec, const RunOptions& options = {});

/// `git hash-object` of a blob: SHA-1 over "blob <size>\0<content>".
std::string git_blob_hash(std::string_view content);

}  // namespace qnd
