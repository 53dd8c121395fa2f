#include "qnd/montecarlo.hpp"

#include "format.hpp"
#include "json_util.hpp"
#include "parallel.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace qnd {

namespace {

// Coherent-state quadrature standard deviation, sqrt(1/2).
const double kVacuumStd = std::sqrt(0.5);

// Atom numbers below this fraction of the mean are clamped (Gaussian tail).
constexpr double kMinAtomFraction = 0.1;

}  // namespace

void SequenceConfig::validate() const {
  if (shots < 2) throw std::invalid_argument("SequenceConfig: shots must be >= 2");
  if (!std::isfinite(kappa_nominal)) {
    throw std::invalid_argument("SequenceConfig: kappa must be finite");
  }
  if (!(sigmaJ_over_J >= 0.0 && sigmaJ_over_J < 0.5)) {
    throw std::invalid_argument("SequenceConfig: sigmaJ/J must lie in [0, 0.5)");
  }
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw std::invalid_argument("SequenceConfig: eta must lie in [0, 1]");
  }
}

ShotRecord sample_shot(const SequenceConfig& config, CounterRng& rng) {
  std::normal_distribution<double> vacuum(0.0, kVacuumStd);
  ShotRecord r;

  r.kappa_shot = config.kappa_nominal;
  if (config.atom_fluctuation && config.sigmaJ_over_J > 0.0) {
    std::normal_distribution<double> atoms(1.0, config.sigmaJ_over_J);
    const double j_ratio = std::max(atoms(rng), kMinAtomFraction);
    r.kappa_shot = config.kappa_nominal * std::sqrt(j_ratio);
  }

  r.jz1 = vacuum(rng);
  r.jz2 = config.mode == SequenceMode::QndCondition ? r.jz1 : vacuum(rng);

  if (config.basis == Basis::Y) {
    r.s1 = vacuum(rng) + r.kappa_shot * r.jz1;
    r.s2 = vacuum(rng) + r.kappa_shot * r.jz2;
  } else {
    r.s1 = vacuum(rng);
    r.s2 = vacuum(rng);
  }

  if (config.eta < 1.0) {
    const double refill = std::sqrt(1.0 - config.eta * config.eta);
    r.s1 = config.eta * r.s1 + refill * vacuum(rng);
    r.s2 = config.eta * r.s2 + refill * vacuum(rng);
  }
  return r;
}

RunResult run_sequence(const SequenceConfig& config, unsigned threads) {
  config.validate();
  RunResult result{config, std::vector<ShotRecord>(config.shots)};
  detail::parallel_for(config.shots, threads, [&](std::size_t i) {
    CounterRng rng(config.seed, i);
    result.records[i] = sample_shot(config, rng);
  });
  return result;
}

std::vector<RunResult> run_kappa_sweep(const SequenceConfig& base,
                                       std::span<const double> kappa_values, unsigned threads) {
  if (kappa_values.empty()) {
    throw std::invalid_argument("run_kappa_sweep: empty kappa list");
  }
  base.validate();
  std::vector<RunResult> out(kappa_values.size());
  detail::parallel_for(kappa_values.size(), threads, [&](std::size_t i) {
    SequenceConfig point = base;
    point.kappa_nominal = kappa_values[i];
    point.seed = derive_seed(base.seed, i);
    out[i] = run_sequence(point, 1);
  });
  return out;
}

void write_csv(std::ostream& out, const RunResult& run) {
  out << "shot,s1,s2,jz1,jz2,kappa_shot\n";
  for (std::size_t i = 0; i < run.records.size(); ++i) {
    const ShotRecord& r = run.records[i];
    out << i << ',' << detail::fmt9(r.s1) << ',' << detail::fmt9(r.s2) << ','
        << detail::fmt9(r.jz1) << ',' << detail::fmt9(r.jz2) << ','
        << detail::fmt9(r.kappa_shot) << '\n';
  }
}

std::string to_csv(const RunResult& run) {
  std::ostringstream out;
  write_csv(out, run);
  return out.str();
}

std::vector<ShotRecord> read_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ConfigError("shot CSV: empty input");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "shot,s1,s2,jz1,jz2,kappa_shot") {
    throw ConfigError("shot CSV: unexpected header \"" + line + "\"");
  }
  std::vector<ShotRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    std::istringstream row(line);
    std::string field;
    double values[6];
    int n = 0;
    while (n < 6 && std::getline(row, field, ',')) {
      char* end = nullptr;
      values[n] = std::strtod(field.c_str(), &end);
      if (end == field.c_str()) {
        throw ConfigError("shot CSV: bad number on line " + std::to_string(line_no));
      }
      ++n;
    }
    if (n != 6) {
      throw ConfigError("shot CSV: expected 6 fields on line " + std::to_string(line_no));
    }
    records.push_back(ShotRecord{values[1], values[2], values[3], values[4], values[5]});
  }
  return records;
}

std::string to_string(SequenceMode mode) {
  return mode == SequenceMode::QndCondition ? "qnd" : "reinit";
}

std::string to_string(Basis basis) { return basis == Basis::Y ? "y" : "z"; }

SequenceMode parse_mode(std::string_view text) {
  if (text == "qnd") return SequenceMode::QndCondition;
  if (text == "reinit") return SequenceMode::Reinitialized;
  throw ConfigError("unknown sequence mode \"" + std::string(text) + "\" (expected qnd|reinit)");
}

Basis parse_basis(std::string_view text) {
  if (text == "y" || text == "Y") return Basis::Y;
  if (text == "z" || text == "Z") return Basis::Z;
  throw ConfigError("unknown basis \"" + std::string(text) + "\" (expected y|z)");
}

nlohmann::json to_json(const SequenceConfig& c) {
  return {{"mode", to_string(c.mode)},
          {"kappa_nominal", detail::round9(c.kappa_nominal)},
          {"shots", c.shots},
          {"atom_fluctuation", c.atom_fluctuation},
          {"sigmaJ_over_J", detail::round9(c.sigmaJ_over_J)},
          {"eta", detail::round9(c.eta)},
          {"basis", to_string(c.basis)},
          {"seed", c.seed}};
}

SequenceConfig config_from_json(const nlohmann::json& j, SequenceConfig c) {
  constexpr std::string_view what = "sequence";
  if (!j.is_object()) throw ConfigError("sequence: must be an object");
  try {
    if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());
    if (j.contains("basis")) c.basis = parse_basis(j.at("basis").get<std::string>());
    c.kappa_nominal = detail::number_or(j, "kappa_nominal", c.kappa_nominal, what);
    if (j.contains("shots")) c.shots = j.at("shots").get<std::uint64_t>();
    if (j.contains("atom_fluctuation")) c.atom_fluctuation = j.at("atom_fluctuation").get<bool>();
    c.sigmaJ_over_J = detail::number_or(j, "sigmaJ_over_J", c.sigmaJ_over_J, what);
    c.eta = detail::number_or(j, "eta", c.eta, what);
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("sequence: ") + e.what());
  }
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

nlohmann::json to_json(const RunResult& run) {
  nlohmann::json rows = nlohmann::json::array();
  for (const ShotRecord& r : run.records) {
    rows.push_back({detail::round9(r.s1), detail::round9(r.s2), detail::round9(r.jz1),
                    detail::round9(r.jz2), detail::round9(r.kappa_shot)});
  }
  return {{"config", to_json(run.config)},
          {"columns", {"s1", "s2", "jz1", "jz2", "kappa_shot"}},
          {"records", std::move(rows)}};
}

}  // namespace qnd
