#include "qnd/stats.hpp"

#include "format.hpp"
#include "parallel.hpp"
#include "qnd/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>

namespace qnd {

namespace {

struct Moments {
  double mean = 0.0;
  double m2 = 0.0;  // sum of squared deviations
  std::size_t n = 0;

  void add(double x) {
    ++n;
    const double d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (x - mean);
  }
  double variance() const { return m2 / static_cast<double>(n - 1); }
};

// Shifted-data two-pass form: exact zero for constant input.
template <class Fn>
double sample_variance(std::span<const ShotRecord> records, Fn value) {
  const double shift = value(records.front());
  double sum = 0.0;
  double sum_sq = 0.0;
  for (const ShotRecord& r : records) {
    const double d = value(r) - shift;
    sum += d;
    sum_sq += d * d;
  }
  const auto n = static_cast<double>(records.size());
  return std::max(0.0, (sum_sq - sum * sum / n) / (n - 1.0));
}

double quantile_sorted(const std::vector<double>& sorted, double p) {
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

nlohmann::json number_or_null(double x) {
  return std::isfinite(x) ? nlohmann::json(detail::round9(x)) : nlohmann::json(nullptr);
}

}  // namespace

VarianceSummary variances(std::span<const ShotRecord> records) {
  if (records.size() < 2) {
    throw InsufficientData("variances: need at least two shots");
  }
  VarianceSummary s;
  s.n = records.size();
  s.sigma1 = sample_variance(records, [](const ShotRecord& r) { return r.s1; });
  s.sigma2 = sample_variance(records, [](const ShotRecord& r) { return r.s2; });
  s.sigma_plus = 0.5 * sample_variance(records, [](const ShotRecord& r) { return r.s1 + r.s2; });
  s.sigma_minus = 0.5 * sample_variance(records, [](const ShotRecord& r) { return r.s1 - r.s2; });
  const double rel = std::sqrt(2.0 / static_cast<double>(s.n - 1));
  s.se_sigma1 = rel * s.sigma1;
  s.se_sigma2 = rel * s.sigma2;
  s.se_plus = rel * s.sigma_plus;
  s.se_minus = rel * s.sigma_minus;
  return s;
}

double pearson_r(std::span<const ShotRecord> records) {
  if (records.size() < 2) {
    throw InsufficientData("pearson_r: need at least two shots");
  }
  double m1 = 0.0;
  double m2 = 0.0;
  for (const ShotRecord& r : records) {
    m1 += r.s1;
    m2 += r.s2;
  }
  m1 /= static_cast<double>(records.size());
  m2 /= static_cast<double>(records.size());
  double c11 = 0.0;
  double c22 = 0.0;
  double c12 = 0.0;
  for (const ShotRecord& r : records) {
    c11 += (r.s1 - m1) * (r.s1 - m1);
    c22 += (r.s2 - m2) * (r.s2 - m2);
    c12 += (r.s1 - m1) * (r.s2 - m2);
  }
  if (c11 == 0.0 || c22 == 0.0) return 0.0;
  return c12 / std::sqrt(c11 * c22);
}

ConditionalResult binned_conditional(std::span<const ShotRecord> records,
                                     const BinningOptions& options) {
  if (options.n_bins < 1) {
    throw std::invalid_argument("binned_conditional: n_bins must be >= 1");
  }
  if (!(options.half_range_sigmas > 0.0)) {
    throw std::invalid_argument("binned_conditional: half range must be positive");
  }
  if (records.size() < 2) {
    throw InsufficientData("binned_conditional: need at least two shots");
  }

  Moments s1;
  for (const ShotRecord& r : records) s1.add(r.s1);
  const double sd = std::sqrt(s1.variance());
  const double lo = s1.mean - options.half_range_sigmas * sd;
  const double hi = s1.mean + options.half_range_sigmas * sd;
  const double width = (hi - lo) / options.n_bins;
  if (!(width > 0.0)) {
    throw InsufficientData("binned_conditional: s1 has no spread to bin");
  }

  ConditionalResult out;
  out.n_bins = options.n_bins;
  out.bin_edges.resize(static_cast<std::size_t>(options.n_bins) + 1);
  for (int b = 0; b <= options.n_bins; ++b) {
    out.bin_edges[static_cast<std::size_t>(b)] = lo + b * width;
  }
  out.bin_edges.back() = hi;

  std::vector<Moments> bins(static_cast<std::size_t>(options.n_bins));
  for (const ShotRecord& r : records) {
    if (r.s1 < lo || r.s1 > hi) continue;
    auto b = static_cast<std::size_t>((r.s1 - lo) / width);
    b = std::min(b, bins.size() - 1);
    bins[b].add(r.s2);
    ++out.n_used;
  }

  std::size_t usable = 0;
  std::size_t usable_count = 0;
  out.per_bin.reserve(bins.size());
  for (const Moments& m : bins) {
    const bool ok = m.n >= 2;
    out.per_bin.push_back(
        BinStat{m.n, ok ? m.variance() : std::numeric_limits<double>::quiet_NaN()});
    if (ok) {
      ++usable;
      usable_count += m.n;
    }
  }
  if (usable < 2) {
    throw InsufficientData("binned_conditional: fewer than two bins hold two or more shots");
  }

  double weighted = 0.0;
  double se_sq = 0.0;
  for (const BinStat& b : out.per_bin) {
    if (b.count < 2) continue;
    const double w = options.weighting == BinWeighting::CountWeighted
                         ? static_cast<double>(b.count) / static_cast<double>(usable_count)
                         : 1.0 / static_cast<double>(usable);
    weighted += w * b.variance;
    se_sq += w * w * 2.0 * b.variance * b.variance / static_cast<double>(b.count - 1);
  }
  out.sigma_cond = weighted;
  out.se_cond = std::sqrt(se_sq);

  double kappa = 0.0;
  if (options.kappa) {
    kappa = *options.kappa;
  } else {
    for (const ShotRecord& r : records) kappa += r.kappa_shot;
    kappa /= static_cast<double>(records.size());
  }
  if (kappa != 0.0) out.squeezing = squeezing_db(out.sigma_cond, kappa);
  return out;
}

double exact_conditional(double kappa) {
  const double k2 = kappa * kappa;
  return (1.0 + 2.0 * k2) / (2.0 * (1.0 + k2));
}

Squeezing squeezing_db(double sigma_cond, double kappa) {
  if (kappa == 0.0 || !std::isfinite(kappa)) {
    throw std::invalid_argument("squeezing_db: kappa must be finite and non-zero");
  }
  const double excess = sigma_cond - 0.5;
  if (!(excess > 0.0)) {
    return Squeezing{std::numeric_limits<double>::infinity(), true};
  }
  return Squeezing{10.0 * std::log10(0.5 * kappa * kappa / excess), false};
}

double sigma_cond_from_db(double db, double kappa) {
  return 0.5 + 0.5 * kappa * kappa * std::pow(10.0, -db / 10.0);
}

TheoryVariances predict(SequenceMode mode, Basis basis, double kappa, double eta) {
  TheoryVariances t;
  if (basis == Basis::Z) return t;
  // Post-interaction attenuation enters the y statistics as kappa -> eta kappa.
  const double g = eta * eta * kappa * kappa;
  t.sigma1 = t.sigma2 = 0.5 * (1.0 + g);
  if (mode == SequenceMode::QndCondition) {
    t.sigma_plus = 0.5 * (1.0 + 2.0 * g);
    t.sigma_minus = 0.5;
    t.sigma_cond = 0.5 + g / (2.0 * (1.0 + g));
  } else {
    t.sigma_plus = t.sigma_minus = t.sigma_cond = t.sigma1;
  }
  return t;
}

Estimator estimator_from_name(std::string_view name) {
  if (name == "sigma1") return Estimator::Sigma1;
  if (name == "sigma2") return Estimator::Sigma2;
  if (name == "sigma_plus") return Estimator::SigmaPlus;
  if (name == "sigma_minus") return Estimator::SigmaMinus;
  if (name == "sigma_cond") return Estimator::SigmaCond;
  if (name == "cond_gain") return Estimator::ConditionalGain;
  throw std::invalid_argument("unknown estimator \"" + std::string(name) + "\"");
}

double evaluate(Estimator estimator, std::span<const ShotRecord> records,
                const BinningOptions& binning) {
  switch (estimator) {
    case Estimator::Sigma1:
      return variances(records).sigma1;
    case Estimator::Sigma2:
      return variances(records).sigma2;
    case Estimator::SigmaPlus:
      return variances(records).sigma_plus;
    case Estimator::SigmaMinus:
      return variances(records).sigma_minus;
    case Estimator::SigmaCond:
      return binned_conditional(records, binning).sigma_cond;
    case Estimator::ConditionalGain:
      return variances(records).sigma2 - binned_conditional(records, binning).sigma_cond;
  }
  throw std::invalid_argument("evaluate: bad estimator");
}

Interval bootstrap_ci(std::span<const ShotRecord> records, Estimator estimator,
                      const BootstrapOptions& options) {
  if (records.size() < 10) {
    throw InsufficientData("bootstrap_ci: need at least 10 shots");
  }
  if (options.resamples < 2) {
    throw std::invalid_argument("bootstrap_ci: need at least two resamples");
  }
  if (!(options.level > 0.0 && options.level < 1.0)) {
    throw std::invalid_argument("bootstrap_ci: level must lie in (0, 1)");
  }
  const auto n_resamples = static_cast<std::size_t>(options.resamples);
  std::vector<double> replicates(n_resamples);
  detail::parallel_for(n_resamples, options.threads, [&](std::size_t b) {
    CounterRng rng(options.seed, b);
    std::uniform_int_distribution<std::size_t> pick(0, records.size() - 1);
    std::vector<ShotRecord> sample(records.size());
    for (ShotRecord& r : sample) r = records[pick(rng)];
    replicates[b] = evaluate(estimator, sample, options.binning);
  });
  std::sort(replicates.begin(), replicates.end());
  const double tail = 0.5 * (1.0 - options.level);
  return Interval{quantile_sorted(replicates, tail), quantile_sorted(replicates, 1.0 - tail)};
}

Interval bootstrap_ci(std::span<const ShotRecord> records, std::string_view estimator,
                      const BootstrapOptions& options) {
  return bootstrap_ci(records, estimator_from_name(estimator), options);
}

nlohmann::json to_json(const VarianceSummary& s) {
  using detail::round9;
  return {{"sigma1", round9(s.sigma1)},       {"sigma2", round9(s.sigma2)},
          {"sigma_plus", round9(s.sigma_plus)}, {"sigma_minus", round9(s.sigma_minus)},
          {"se_sigma1", round9(s.se_sigma1)}, {"se_sigma2", round9(s.se_sigma2)},
          {"se_plus", round9(s.se_plus)},     {"se_minus", round9(s.se_minus)},
          {"n", s.n}};
}

nlohmann::json to_json(const ConditionalResult& c) {
  nlohmann::json edges = nlohmann::json::array();
  for (double e : c.bin_edges) edges.push_back(detail::round9(e));
  nlohmann::json bins = nlohmann::json::array();
  for (const BinStat& b : c.per_bin) {
    bins.push_back({{"count", b.count}, {"variance", number_or_null(b.variance)}});
  }
  nlohmann::json j = {{"sigma_cond", detail::round9(c.sigma_cond)},
                      {"se_cond", detail::round9(c.se_cond)},
                      {"n_bins", c.n_bins},
                      {"n_used", c.n_used},
                      {"bin_edges", std::move(edges)},
                      {"per_bin", std::move(bins)}};
  if (!c.squeezing) {
    j["squeezing_db"] = nullptr;
    j["squeezing"] = "undefined";
  } else if (c.squeezing->infinite) {
    j["squeezing_db"] = nullptr;
    j["squeezing"] = "infinite";
  } else {
    j["squeezing_db"] = detail::round9(c.squeezing->db);
    j["squeezing"] = "finite";
  }
  return j;
}

}  // namespace qnd
