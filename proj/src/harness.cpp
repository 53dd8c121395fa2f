#include "qnd/harness.hpp"

#include "format.hpp"
#include "json_util.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <sstream>

namespace qnd {

namespace fs = std::filesystem;

namespace {

constexpr std::string_view kSpec = "experiment spec";
constexpr int kTheoryPoints = 201;
constexpr double kCheckSigmas = 3.0;

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << content;
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  }
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::vector<double> theory_abscissa(std::span<const double> grid) {
  double top = 0.0;
  for (double k : grid) top = std::max(top, std::abs(k));
  if (top == 0.0) top = 1.0;
  std::vector<double> xs(kTheoryPoints);
  for (int i = 0; i < kTheoryPoints; ++i) {
    xs[static_cast<std::size_t>(i)] = top * i / (kTheoryPoints - 1);
  }
  return xs;
}

// Standard error of a sample variance when the true variance is `expected`.
double null_se(double expected, std::size_t n) {
  return expected * std::sqrt(2.0 / static_cast<double>(n - 1));
}

void check_within(std::vector<std::string>& failures, const std::string& what, double value,
                  double expected, double se) {
  if (std::abs(value - expected) > kCheckSigmas * se) {
    failures.push_back(what + ": " + detail::fmt9(value) + " vs theory " + detail::fmt9(expected) +
                       " (SE " + detail::fmt9(se) + ")");
  }
}

// Writes every file, then the manifest that lists them.
void finalize(FigureBundle& bundle, const ExperimentSpec& spec, std::span<const double> grid,
              const std::vector<std::pair<std::string, std::string>>& data,
              const std::vector<std::pair<std::string, std::string>>& theory,
              nlohmann::json extra = nlohmann::json::object()) {
  ensure_dir(spec.outputs);
  auto emit = [&](const auto& files, std::vector<fs::path>& paths) {
    nlohmann::json listed = nlohmann::json::array();
    for (const auto& [name, content] : files) {
      const fs::path path = spec.outputs / name;
      write_file(path, content);
      paths.push_back(path);
      listed.push_back({{"path", name}, {"git_hash", git_blob_hash(content)}});
    }
    return listed;
  };
  nlohmann::json m;
  m["figure_id"] = to_string(bundle.figure_id);
  m["data_files"] = emit(data, bundle.data_files);
  m["theory_files"] = emit(theory, bundle.theory_files);
  std::string joined;
  for (const auto& f : m["data_files"]) joined += f["git_hash"].get<std::string>() + "\n";
  m["content_hash"] = git_blob_hash(joined);
  m["spec"] = to_json(spec);
  m["seed"] = spec.sequence.seed;
  nlohmann::json grid_json = nlohmann::json::array();
  for (double k : grid) grid_json.push_back(detail::round9(k));
  m["kappa_grid"] = std::move(grid_json);
  m["timestamp"] = utc_timestamp();
  m["check"] = {{"passed", bundle.check_passed()}, {"failures", bundle.check_failures}};
  for (auto& [k, v] : extra.items()) m[k] = v;

  bundle.manifest_path = spec.outputs / (to_string(bundle.figure_id) + "_manifest.json");
  write_file(bundle.manifest_path, m.dump(2) + "\n");
  bundle.manifest = std::move(m);
}

std::string squeezing_text(const std::optional<Squeezing>& s) {
  if (!s) return "nan";
  if (s->infinite) return "inf";
  return detail::fmt9(s->db);
}

}  // namespace

std::string git_blob_hash(std::string_view content) {
  const std::string header = "blob " + std::to_string(content.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw std::runtime_error("git_blob_hash: EVP_MD_CTX_new failed");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 &&
                  EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, content.data(), content.size()) == 1 &&
                  EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw std::runtime_error("git_blob_hash: SHA-1 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(2 * len);
  for (unsigned i = 0; i < len; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xf]);
  }
  return hex;
}

std::string to_string(FigureId id) {
  switch (id) {
    case FigureId::JointY:
      return "joint";
    case FigureId::JointZ:
      return "joint_z";
    case FigureId::VarianceSweep:
      return "variance_sweep";
    case FigureId::ConditionalSweep:
      return "conditional_sweep";
  }
  return "unknown";
}

ExperimentSpec parse_spec(std::string_view json_text, const fs::path& base_dir) {
  const nlohmann::json doc = detail::parse_json(json_text, kSpec);
  if (!doc.is_object()) throw ConfigError("experiment spec: top level must be an object");
  ExperimentSpec spec;
  try {
    spec.name = detail::require_key(doc, "name", kSpec).get<std::string>();
    if (doc.contains("physics_sheet")) {
      fs::path sheet = doc.at("physics_sheet").get<std::string>();
      spec.physics_sheet = sheet.is_relative() ? base_dir / sheet : sheet;
    }
    if (doc.contains("sequence")) spec.sequence = config_from_json(doc.at("sequence"));
    if (doc.contains("kappa_grid")) spec.kappa_grid = doc.at("kappa_grid").get<std::vector<double>>();
    if (doc.contains("photon_grid")) {
      spec.photon_grid = doc.at("photon_grid").get<std::vector<double>>();
    }
    if (doc.contains("outputs")) spec.outputs = doc.at("outputs").get<std::string>();
    if (doc.contains("n_bins")) spec.binning.n_bins = doc.at("n_bins").get<int>();
    spec.binning.half_range_sigmas =
        detail::number_or(doc, "half_range_sigmas", spec.binning.half_range_sigmas, kSpec);
    if (doc.contains("bin_weighting")) {
      const auto w = doc.at("bin_weighting").get<std::string>();
      if (w == "count") {
        spec.binning.weighting = BinWeighting::CountWeighted;
      } else if (w == "uniform") {
        spec.binning.weighting = BinWeighting::Uniform;
      } else {
        throw ConfigError("experiment spec: bin_weighting must be \"count\" or \"uniform\"");
      }
    }
    if (doc.contains("bootstrap_resamples")) {
      spec.bootstrap_resamples = doc.at("bootstrap_resamples").get<int>();
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("experiment spec: ") + e.what());
  }
  if (spec.name.empty()) throw ConfigError("experiment spec: name must be non-empty");
  if (!spec.kappa_grid.empty() && !spec.photon_grid.empty()) {
    throw ConfigError("experiment spec: kappa_grid and photon_grid are mutually exclusive");
  }
  if (!spec.photon_grid.empty() && !spec.physics_sheet) {
    throw ConfigError("experiment spec: photon_grid requires physics_sheet");
  }
  if (spec.binning.n_bins < 1) throw ConfigError("experiment spec: n_bins must be >= 1");
  if (!(spec.binning.half_range_sigmas > 0.0)) {
    throw ConfigError("experiment spec: half_range_sigmas must be positive");
  }
  if (spec.bootstrap_resamples < 2) {
    throw ConfigError("experiment spec: bootstrap_resamples must be >= 2");
  }
  return spec;
}

ExperimentSpec load_spec(const fs::path& path) {
  try {
    return parse_spec(detail::read_text_file(path), path.parent_path());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

nlohmann::json to_json(const ExperimentSpec& spec) {
  nlohmann::json j;
  j["name"] = spec.name;
  if (spec.physics_sheet) j["physics_sheet"] = spec.physics_sheet->string();
  j["sequence"] = to_json(spec.sequence);
  auto rounded = [](const std::vector<double>& xs) {
    nlohmann::json a = nlohmann::json::array();
    for (double x : xs) a.push_back(detail::round9(x));
    return a;
  };
  if (!spec.kappa_grid.empty()) j["kappa_grid"] = rounded(spec.kappa_grid);
  if (!spec.photon_grid.empty()) j["photon_grid"] = rounded(spec.photon_grid);
  j["outputs"] = spec.outputs.string();
  j["n_bins"] = spec.binning.n_bins;
  j["half_range_sigmas"] = detail::round9(spec.binning.half_range_sigmas);
  j["bin_weighting"] =
      spec.binning.weighting == BinWeighting::CountWeighted ? "count" : "uniform";
  j["bootstrap_resamples"] = spec.bootstrap_resamples;
  return j;
}

std::vector<double> resolve_kappa_grid(const ExperimentSpec& spec) {
  if (!spec.kappa_grid.empty()) return spec.kappa_grid;
  if (spec.photon_grid.empty()) return kDefaultKappaGrid;
  PhysicsSheet sheet = load_physics_sheet(*spec.physics_sheet);
  std::vector<double> grid;
  for (double photons : spec.photon_grid) {
    sheet.pulse.photons = photons;
    try {
      grid.push_back(std::abs(coupling_strength(sheet.atomic, sheet.pulse)));
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("photon_grid: ") + e.what());
    }
  }
  return grid;
}

KappaReport kappa_report(const PhysicsSheet& sheet, double photons) {
  PulseParams pulse = sheet.pulse;
  pulse.photons = photons;
  KappaReport r;
  r.photons = photons;
  r.coupling = derive_coupling(sheet.atomic, pulse);
  if (pulse.S() > 0.0) {
    r.kappa_roundtrip = kappa_from_angle(r.coupling.phi, pulse.S(), sheet.atomic.J);
    r.consistency_residual =
        std::abs(r.coupling.phi - 0.5 * r.coupling.kappa * std::sqrt(sheet.atomic.J / pulse.S()));
  }
  return r;
}

nlohmann::json to_json(const KappaReport& r) {
  using detail::round9;
  return {{"photons", round9(r.photons)},
          {"S", round9(r.photons / 2.0)},
          {"kappa", round9(r.coupling.kappa)},
          {"abs_kappa", round9(std::abs(r.coupling.kappa))},
          {"phi_rad", round9(r.coupling.phi)},
          {"phi_mrad", round9(1e3 * r.coupling.phi)},
          {"epsilon", round9(r.coupling.epsilon)},
          {"kappa_from_phi", round9(r.kappa_roundtrip)},
          {"phi_consistency_residual", round9(r.consistency_residual)}};
}

std::string to_text(const KappaReport& r) {
  using detail::fmt9;
  std::ostringstream out;
  out << "photons N_L        " << fmt9(r.photons) << "\n"
      << "kappa              " << fmt9(r.coupling.kappa) << "  (|kappa| "
      << fmt9(std::abs(r.coupling.kappa)) << ")\n"
      << "phi [mrad]         " << fmt9(1e3 * r.coupling.phi) << "\n"
      << "epsilon            " << fmt9(r.coupling.epsilon) << "\n"
      << "kappa from phi     " << fmt9(r.kappa_roundtrip) << "\n"
      << "phi residual       " << fmt9(r.consistency_residual) << "\n";
  return out.str();
}

FigureBundle cmd_joint(const ExperimentSpec& spec, const RunOptions& options) {
  struct Panel {
    std::string id;
    double kappa;
    Basis basis;
  };
  const double kappa = spec.sequence.kappa_nominal;
  const std::vector<Panel> panels{
      {"a", 0.0, Basis::Y}, {"b", kappa, Basis::Y}, {"c", kappa, Basis::Z}};

  FigureBundle bundle;
  bundle.figure_id = FigureId::JointY;
  std::vector<std::pair<std::string, std::string>> data;
  nlohmann::json summary = nlohmann::json::object();
  nlohmann::json panel_ids = nlohmann::json::object();
  for (std::size_t i = 0; i < panels.size(); ++i) {
    const Panel& p = panels[i];
    SequenceConfig config = spec.sequence;
    config.kappa_nominal = p.kappa;
    config.basis = p.basis;
    config.seed = derive_seed(spec.sequence.seed, i);
    const RunResult run = run_sequence(config, options.threads);

    const VarianceSummary v = variances(run.records);
    const double r = pearson_r(run.records);
    const double se_r = (1.0 - r * r) / std::sqrt(static_cast<double>(v.n - 1));
    const TheoryVariances t = predict(config.mode, config.basis, p.kappa, config.eta);
    const double r_theory =
        0.5 * (t.sigma_plus - t.sigma_minus) / std::sqrt(t.sigma1 * t.sigma2);

    summary[p.id] = {{"config", to_json(config)},
                     {"variances", to_json(v)},
                     {"pearson_r", detail::round9(r)},
                     {"se_pearson_r", detail::round9(se_r)},
                     {"theory_pearson_r", detail::round9(r_theory)}};
    panel_ids[p.id] = to_string(p.basis == Basis::Y ? FigureId::JointY : FigureId::JointZ);

    const std::string tag = "panel " + p.id;
    check_within(bundle.check_failures, tag + " sigma1", v.sigma1, t.sigma1,
                 null_se(t.sigma1, v.n));
    check_within(bundle.check_failures, tag + " sigma2", v.sigma2, t.sigma2,
                 null_se(t.sigma2, v.n));
    check_within(bundle.check_failures, tag + " pearson_r", r, r_theory,
                 (1.0 - r_theory * r_theory) / std::sqrt(static_cast<double>(v.n - 1)));

    data.emplace_back("joint_panel_" + p.id + ".csv", to_csv(run));
  }
  data.emplace_back("joint_summary.json", summary.dump(2) + "\n");
  finalize(bundle, spec, std::vector<double>{kappa}, data, {}, {{"panels", panel_ids}});
  return bundle;
}

FigureBundle cmd_variance_sweep(const ExperimentSpec& spec, std::optional<SequenceMode> mode,
                                const RunOptions& options) {
  const std::vector<double> grid = resolve_kappa_grid(spec);
  std::vector<SequenceMode> modes;
  if (mode) {
    modes.push_back(*mode);
  } else {
    modes = {SequenceMode::QndCondition, SequenceMode::Reinitialized};
  }

  FigureBundle bundle;
  bundle.figure_id = FigureId::VarianceSweep;
  std::vector<std::pair<std::string, std::string>> data;
  for (SequenceMode m : modes) {
    SequenceConfig base = spec.sequence;
    base.mode = m;
    base.seed = derive_seed(spec.sequence.seed, 0x100 + static_cast<std::uint64_t>(m));
    const std::vector<RunResult> runs = run_kappa_sweep(base, grid, options.threads);

    std::ostringstream csv;
    csv << "kappa,sigma1,sigma2,sigma_plus,sigma_minus,se_sigma1,se_sigma2,se_plus,se_minus,n\n";
    for (std::size_t i = 0; i < runs.size(); ++i) {
      const VarianceSummary v = variances(runs[i].records);
      using detail::fmt9;
      csv << fmt9(grid[i]) << ',' << fmt9(v.sigma1) << ',' << fmt9(v.sigma2) << ','
          << fmt9(v.sigma_plus) << ',' << fmt9(v.sigma_minus) << ',' << fmt9(v.se_sigma1) << ','
          << fmt9(v.se_sigma2) << ',' << fmt9(v.se_plus) << ',' << fmt9(v.se_minus) << ',' << v.n
          << '\n';

      const TheoryVariances t = predict(m, base.basis, grid[i], base.eta);
      const std::string tag = to_string(m) + " kappa=" + fmt9(grid[i]);
      check_within(bundle.check_failures, tag + " sigma1", v.sigma1, t.sigma1,
                   null_se(t.sigma1, v.n));
      check_within(bundle.check_failures, tag + " sigma2", v.sigma2, t.sigma2,
                   null_se(t.sigma2, v.n));
      check_within(bundle.check_failures, tag + " sigma_plus", v.sigma_plus, t.sigma_plus,
                   null_se(t.sigma_plus, v.n));
      check_within(bundle.check_failures, tag + " sigma_minus", v.sigma_minus, t.sigma_minus,
                   null_se(t.sigma_minus, v.n));
    }
    data.emplace_back("variance_sweep_" + to_string(m) + ".csv", csv.str());
  }

  std::ostringstream theory;
  theory << "kappa,individual,plus,minus\n";
  for (double k : theory_abscissa(grid)) {
    using detail::fmt9;
    theory << fmt9(k) << ',' << fmt9(0.5 * (1.0 + k * k)) << ','
           << fmt9(0.5 * (1.0 + 2.0 * k * k)) << ',' << fmt9(0.5) << '\n';
  }
  finalize(bundle, spec, grid, data, {{"variance_theory.csv", theory.str()}});
  return bundle;
}

FigureBundle cmd_conditional_sweep(const ExperimentSpec& spec, const RunOptions& options) {
  const std::vector<double> grid = resolve_kappa_grid(spec);
  SequenceConfig base = spec.sequence;
  base.mode = SequenceMode::QndCondition;
  base.basis = Basis::Y;
  const std::vector<RunResult> runs = run_kappa_sweep(base, grid, options.threads);

  FigureBundle bundle;
  bundle.figure_id = FigureId::ConditionalSweep;
  std::ostringstream csv;
  csv << "kappa,sigma2_minus_half,se_sigma2,sigmacond_minus_half,se_cond,gain,se_gain,"
         "squeezing_db\n";
  for (std::size_t i = 0; i < runs.size(); ++i) {
    using detail::fmt9;
    const RunResult& run = runs[i];
    BinningOptions binning = spec.binning;
    binning.kappa = grid[i];
    const VarianceSummary v = variances(run.records);
    const ConditionalResult c = binned_conditional(run.records, binning);

    BootstrapOptions boot;
    boot.resamples = spec.bootstrap_resamples;
    boot.seed = derive_seed(run.config.seed, 0xb007);
    boot.binning = binning;
    boot.threads = options.threads;
    const Interval gain_ci = bootstrap_ci(run.records, Estimator::ConditionalGain, boot);
    const double se_gain = 0.5 * (gain_ci.high - gain_ci.low);

    csv << fmt9(grid[i]) << ',' << fmt9(v.sigma2 - 0.5) << ',' << fmt9(v.se_sigma2) << ','
        << fmt9(c.sigma_cond - 0.5) << ',' << fmt9(c.se_cond) << ','
        << fmt9(v.sigma2 - c.sigma_cond) << ',' << fmt9(se_gain) << ','
        << squeezing_text(c.squeezing) << '\n';

    const TheoryVariances t = predict(base.mode, base.basis, grid[i], base.eta);
    const std::string tag = "kappa=" + fmt9(grid[i]);
    check_within(bundle.check_failures, tag + " sigma_cond", c.sigma_cond, t.sigma_cond,
                 c.se_cond);
    check_within(bundle.check_failures, tag + " sigma2", v.sigma2, t.sigma2,
                 null_se(t.sigma2, v.n));
  }

  std::ostringstream theory;
  theory << "kappa,total_minus_half,cond_minus_half,squeezing_db\n";
  for (double k : theory_abscissa(grid)) {
    using detail::fmt9;
    const double k2 = k * k;
    theory << fmt9(k) << ',' << fmt9(0.5 * k2) << ',' << fmt9(k2 / (2.0 * (1.0 + k2))) << ','
           << fmt9(10.0 * std::log10(1.0 + k2)) << '\n';
  }
  finalize(bundle, spec, grid, {{"conditional_sweep.csv", csv.str()}},
           {{"conditional_theory.csv", theory.str()}});
  return bundle;
}

}  // namespace qnd
