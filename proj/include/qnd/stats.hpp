#pragma once

// Estimators for the two-pulse statistics: individual and correlation
// variances, the binned conditional variance of the second pulse given the
// first, squeezing in dB, and percentile-bootstrap intervals.

#include "qnd/montecarlo.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace qnd {

struct VarianceSummary {
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double sigma_plus = 0.0;   // Var(s1 + s2) / 2
  double sigma_minus = 0.0;  // Var(s1 - s2) / 2
  double se_sigma1 = 0.0;
  double se_sigma2 = 0.0;
  double se_plus = 0.0;
  double se_minus = 0.0;
  std::size_t n = 0;
};

/// Bessel-corrected variances; each SE is sqrt(2/(n-1)) times the estimate
/// (Gaussian fourth moment). Throws InsufficientData for n < 2.
VarianceSummary variances(std::span<const ShotRecord> records);

/// Sample Pearson correlation of (s1, s2); 0 when either side is constant.
double pearson_r(std::span<const ShotRecord> records);

enum class BinWeighting { CountWeighted, Uniform };

struct BinningOptions {
  int n_bins = 21;
  // +-2.5 standard deviations of s1 keeps ~98.8% of Gaussian data while the
  // outer bins still collect enough shots for a variance.
  double half_range_sigmas = 2.5;
  BinWeighting weighting = BinWeighting::CountWeighted;
  // Coupling used for squeezing_db; defaults to the mean kappa_shot.
  std::optional<double> kappa;
};

struct BinStat {
  std::size_t count = 0;
  double variance = 0.0;  // NaN when count < 2
};

struct Squeezing {
  double db = 0.0;
  // sigma_cond <= 1/2: the inferred conditional spin variance is not
  // positive, a finite-sample artifact. db is +inf in that case.
  bool infinite = false;
};

struct ConditionalResult {
  double sigma_cond = 0.0;
  double se_cond = 0.0;
  int n_bins = 0;
  std::vector<double> bin_edges;  // n_bins + 1 edges
  std::vector<BinStat> per_bin;
  std::size_t n_used = 0;             // shots inside the binned range
  std::optional<Squeezing> squeezing;  // empty when kappa = 0
};

/// Variance of s2 conditioned on s1: s1 is split into equal-width bins over
/// mean(s1) +- half_range_sigmas * std(s1), the Bessel-corrected variance of
/// s2 is taken per bin, and bins with at least two shots are averaged.
/// Throws InsufficientData when fewer than two bins are usable.
ConditionalResult binned_conditional(std::span<const ShotRecord> records,
                                     const BinningOptions& options = {});

/// Closed-form conditional variance (1 + 2k^2) / (2 (1 + k^2)).
double exact_conditional(double kappa);

/// 10 log10[(k^2/2) / (sigma_cond - 1/2)]. Throws std::invalid_argument for
/// kappa = 0.
Squeezing squeezing_db(double sigma_cond, double kappa);

/// Inverse of squeezing_db: the sigma_cond that yields `db` at `kappa`.
double sigma_cond_from_db(double db, double kappa);

/// Closed-form predictions for the protocol statistics with post-interaction
/// amplitude transmission eta. In basis Z every variance is 1/2.
struct TheoryVariances {
  double sigma1 = 0.5;
  double sigma2 = 0.5;
  double sigma_plus = 0.5;
  double sigma_minus = 0.5;
  double sigma_cond = 0.5;
};
TheoryVariances predict(SequenceMode mode, Basis basis, double kappa, double eta = 1.0);

enum class Estimator { Sigma1, Sigma2, SigmaPlus, SigmaMinus, SigmaCond, ConditionalGain };

/// "sigma1", "sigma2", "sigma_plus", "sigma_minus", "sigma_cond",
/// "cond_gain" (sigma2 - sigma_cond). Throws std::invalid_argument otherwise.
Estimator estimator_from_name(std::string_view name);
double evaluate(Estimator estimator, std::span<const ShotRecord> records,
                const BinningOptions& binning = {});

struct BootstrapOptions {
  int resamples = 1000;
  double level = 0.683;
  std::uint64_t seed = kDefaultSeed;
  BinningOptions binning;
  unsigned threads = 1;
};

struct Interval {
  double low = 0.0;
  double high = 0.0;
};

/// Percentile bootstrap. Resample b draws indices from CounterRng(seed, b),
/// so the interval is deterministic for any thread count. Throws
/// InsufficientData for fewer than 10 records.
Interval bootstrap_ci(std::span<const ShotRecord> records, Estimator estimator,
                      const BootstrapOptions& options = {});
Interval bootstrap_ci(std::span<const ShotRecord> records, std::string_view estimator,
                      const BootstrapOptions& options = {});

nlohmann::json to_json(const VarianceSummary& summary);
nlohmann::json to_json(const ConditionalResult& result);

}  // namespace qnd
