#pragma once

// Shot-by-shot sampling of the two-pulse protocol.
//
// Each shot draws the latent atomic J_z and the input light quadratures
// explicitly and applies the QND input-output relations. In QndCondition mode
// both pulses see the same J_z; in Reinitialized mode the atoms are re-pumped
// between pulses and the second pulse sees a fresh J_z.

#include "qnd/rng.hpp"

#include <json.hpp>

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qnd {

enum class SequenceMode { QndCondition, Reinitialized };
enum class Basis { Y, Z };

inline constexpr std::uint64_t kDefaultShots = 2600;
inline constexpr std::uint64_t kDefaultSeed = 0x5eed0171ULL;

struct SequenceConfig {
  SequenceMode mode = SequenceMode::QndCondition;
  double kappa_nominal = 0.0;
  std::uint64_t shots = kDefaultShots;
  bool atom_fluctuation = false;
  double sigmaJ_over_J = 0.0;
  double eta = 1.0;  // amplitude transmission after the interaction
  Basis basis = Basis::Y;
  std::uint64_t seed = kDefaultSeed;

  /// Throws std::invalid_argument: shots >= 2, 0 <= sigmaJ_over_J < 0.5,
  /// eta in [0, 1], finite kappa.
  void validate() const;
};

struct ShotRecord {
  double s1 = 0.0;  // first pulse outcome in the configured basis
  double s2 = 0.0;
  double jz1 = 0.0;  // latent atomic J_z seen by pulse 1
  double jz2 = 0.0;  // latent atomic J_z seen by pulse 2
  double kappa_shot = 0.0;
};

struct RunResult {
  SequenceConfig config;
  std::vector<ShotRecord> records;
};

/// Draws one shot from `rng`. Deterministic in the generator state.
ShotRecord sample_shot(const SequenceConfig& config, CounterRng& rng);

/// Runs config.shots shots; shot i uses CounterRng(config.seed, i). The
/// result is bitwise identical for any `threads` >= 1.
RunResult run_sequence(const SequenceConfig& config, unsigned threads = 1);

/// One run per kappa; point i uses seed derive_seed(base.seed, i). Points run
/// concurrently on up to `threads` workers.
std::vector<RunResult> run_kappa_sweep(const SequenceConfig& base,
                                       std::span<const double> kappa_values,
                                       unsigned threads = 1);

/// CSV with header "shot,s1,s2,jz1,jz2,kappa_shot", 9 significant digits.
void write_csv(std::ostream& out, const RunResult& run);
std::string to_csv(const RunResult& run);
/// Reads the CSV written by write_csv. Throws ConfigError on malformed rows.
std::vector<ShotRecord> read_csv(std::istream& in);

nlohmann::json to_json(const SequenceConfig& config);
SequenceConfig config_from_json(const nlohmann::json& j, SequenceConfig defaults = {});
/// JSON envelope: {"config": ..., "records": [[s1, s2, jz1, jz2, kappa_shot], ...]}.
nlohmann::json to_json(const RunResult& run);

std::string to_string(SequenceMode mode);
std::string to_string(Basis basis);
SequenceMode parse_mode(std::string_view text);
Basis parse_basis(std::string_view text);

}  // namespace qnd
