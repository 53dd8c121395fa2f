// qnd: command-line front end for the two-pulse QND simulator.
//
// Exit codes: 0 success, 2 configuration error, 3 I/O error,
// 4 statistical check failure (with --check).

#include "qnd/errors.hpp"
#include "qnd/harness.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <thread>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitCheck = 4;

struct GlobalOptions {
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> shots;
  std::optional<std::string> out;
  unsigned threads = 0;
};

qnd::ExperimentSpec load_with_overrides(const std::string& path, const GlobalOptions& g) {
  qnd::ExperimentSpec spec = qnd::load_spec(path);
  if (g.seed) spec.sequence.seed = *g.seed;
  if (g.shots) {
    spec.sequence.shots = *g.shots;
    try {
      spec.sequence.validate();
    } catch (const std::invalid_argument& e) {
      throw qnd::ConfigError(e.what());
    }
  }
  if (g.out) spec.outputs = *g.out;
  return spec;
}

qnd::RunOptions run_options(const GlobalOptions& g) {
  qnd::RunOptions o;
  o.threads = g.threads > 0 ? g.threads : std::max(1u, std::thread::hardware_concurrency());
  return o;
}

int report(const qnd::FigureBundle& bundle, bool check) {
  std::cout << "wrote " << bundle.manifest_path.string() << "\n";
  for (const auto& p : bundle.data_files) std::cout << "  data   " << p.string() << "\n";
  for (const auto& p : bundle.theory_files) std::cout << "  theory " << p.string() << "\n";
  if (!check) return kExitOk;
  if (bundle.check_passed()) {
    std::cout << "check: PASS\n";
    return kExitOk;
  }
  std::cout << "check: FAIL\n";
  for (const auto& f : bundle.check_failures) std::cout << "  " << f << "\n";
  return kExitCheck;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gaussian simulator for two-pulse QND measurement of a collective spin"};
  app.require_subcommand(1);

  GlobalOptions g;
  app.add_option("--seed", g.seed, "Override the RNG seed");
  app.add_option("--shots", g.shots, "Override the shot count");
  app.add_option("--out", g.out, "Override the output directory");
  app.add_option("--threads", g.threads, "Worker threads (0 = hardware concurrency)");

  std::string sheet_path;
  double photons = 0.0;
  bool as_json = false;
  auto* kappa_cmd = app.add_subcommand("kappa", "Coupling, Faraday angle and loss from a sheet");
  kappa_cmd->add_option("--sheet", sheet_path, "Physics sheet (JSON)")->required();
  kappa_cmd->add_option("--photons", photons, "Mean photon number N_L")->required();
  kappa_cmd->add_flag("--json", as_json, "Emit JSON");

  std::string spec_path;
  auto* joint_cmd = app.add_subcommand("joint", "Joint distribution panels (no atoms, y, z)");
  joint_cmd->add_option("--spec", spec_path, "Experiment spec (JSON)")->required();

  std::string mode_text;
  bool check = false;
  auto* sweep_cmd = app.add_subcommand("sweep", "Variance sweep over the kappa grid");
  sweep_cmd->add_option("--spec", spec_path, "Experiment spec (JSON)")->required();
  sweep_cmd->add_option("--mode", mode_text, "qnd or reinit (default: both)")
      ->check(CLI::IsMember({"qnd", "reinit"}));
  sweep_cmd->add_flag("--check", check, "Exit 4 unless every point is within 3 SE of theory");

  auto* cond_cmd = app.add_subcommand("conditional", "Conditional variance and squeezing sweep");
  cond_cmd->add_option("--spec", spec_path, "Experiment spec (JSON)")->required();
  cond_cmd->add_flag("--check", check, "Exit 4 unless every point is within 3 SE of theory");

  std::string csv_path;
  int n_bins = 21;
  auto* stats_cmd = app.add_subcommand("stats", "Summarize a shot CSV as JSON");
  stats_cmd->add_option("--csv", csv_path, "Shot CSV written by joint/sweep")->required();
  stats_cmd->add_option("--bins", n_bins, "Bins for the conditional variance");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*kappa_cmd) {
      if (!(photons >= 0.0)) throw qnd::ConfigError("--photons must be non-negative");
      const qnd::KappaReport r = qnd::kappa_report(qnd::load_physics_sheet(sheet_path), photons);
      if (as_json) {
        std::cout << qnd::to_json(r).dump(2) << "\n";
      } else {
        std::cout << qnd::to_text(r);
      }
      return kExitOk;
    }
    if (*joint_cmd) {
      return report(qnd::cmd_joint(load_with_overrides(spec_path, g), run_options(g)), false);
    }
    if (*sweep_cmd) {
      std::optional<qnd::SequenceMode> mode;
      if (!mode_text.empty()) mode = qnd::parse_mode(mode_text);
      return report(
          qnd::cmd_variance_sweep(load_with_overrides(spec_path, g), mode, run_options(g)), check);
    }
    if (*cond_cmd) {
      return report(qnd::cmd_conditional_sweep(load_with_overrides(spec_path, g), run_options(g)),
                    check);
    }
    if (*stats_cmd) {
      std::ifstream in(csv_path);
      if (!in) throw qnd::IoError("cannot open " + csv_path);
      const auto records = qnd::read_csv(in);
      qnd::BinningOptions binning;
      binning.n_bins = n_bins;
      nlohmann::json out = {{"variances", qnd::to_json(qnd::variances(records))}};
      try {
        out["conditional"] = qnd::to_json(qnd::binned_conditional(records, binning));
      } catch (const qnd::InsufficientData& e) {
        out["conditional"] = {{"error", e.what()}};
      }
      std::cout << out.dump(2) << "\n";
      return kExitOk;
    }
  } catch (const qnd::IoError& e) {
    std::cerr << "qnd: " << e.what() << "\n";
    return kExitIo;
  } catch (const qnd::ConfigError& e) {
    std::cerr << "qnd: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "qnd: " << e.what() << "\n";
    return kExitConfig;
  } catch (const qnd::InsufficientData& e) {
    std::cerr << "qnd: " << e.what() << "\n";
    return kExitConfig;
  }
  return kExitOk;
}
