#include "qnd/errors.hpp"
#include "qnd/gaussian.hpp"
#include "qnd/stats.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

using namespace qnd;

namespace {

constexpr double kKappaMax = 0.62;

std::vector<ShotRecord> shots(double kappa, SequenceMode mode, std::uint64_t n,
                              std::uint64_t seed) {
  SequenceConfig c;
  c.kappa_nominal = kappa;
  c.mode = mode;
  c.shots = n;
  c.seed = seed;
  return run_sequence(c).records;
}

std::vector<ShotRecord> gaussian_column(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d(0.0, std::sqrt(0.5));
  std::vector<ShotRecord> rs(n);
  for (auto& r : rs) {
    r.s1 = d(gen);
    r.s2 = d(gen);
  }
  return rs;
}

}  // namespace

TEST_CASE("variances") {
  const std::vector<ShotRecord> same(50, ShotRecord{0.3, -0.1, 0.0, 0.0, 0.0});
  const VarianceSummary z = variances(same);
  CHECK(z.sigma1 == 0.0);
  CHECK(z.sigma2 == 0.0);
  CHECK(z.sigma_plus == 0.0);
  CHECK(z.sigma_minus == 0.0);

  // Tolerances use the standard error under the predicted variance.
  const VarianceSummary v = variances(shots(kKappaMax, SequenceMode::QndCondition, 2600, 31));
  const double rel = std::sqrt(2.0 / 2599);
  CHECK(v.n == 2600);
  CHECK(std::abs(v.sigma1 - 0.6922) < 3 * rel * 0.6922);
  CHECK(std::abs(v.sigma2 - 0.6922) < 3 * rel * 0.6922);
  CHECK(std::abs(v.sigma_plus - 0.8844) < 3 * rel * 0.8844);
  CHECK(std::abs(v.sigma_minus - 0.5) < 3 * rel * 0.5);
  CHECK(v.se_sigma1 == doctest::Approx(v.sigma1 * std::sqrt(2.0 / 2599)));

  const VarianceSummary v0 = variances(shots(0.0, SequenceMode::QndCondition, 2600, 32));
  for (auto [x, se] : {std::pair{v0.sigma1, v0.se_sigma1}, std::pair{v0.sigma2, v0.se_sigma2},
                       std::pair{v0.sigma_plus, v0.se_plus},
                       std::pair{v0.sigma_minus, v0.se_minus}}) {
    CHECK(std::abs(x - 0.5) < 3 * se);
  }

  // Bessel correction: {0, 1} has sample variance 1/2.
  const std::vector<ShotRecord> two{{0.0, 0.0, 0, 0, 0}, {1.0, 1.0, 0, 0, 0}};
  CHECK(variances(two).sigma1 == 0.5);
  CHECK_THROWS_AS(variances(std::vector<ShotRecord>(1)), InsufficientData);
}

TEST_CASE("exact_conditional") {
  CHECK(exact_conditional(0.0) == 0.5);
  CHECK(exact_conditional(kKappaMax) == doctest::Approx(0.63883).epsilon(1e-5));
  CHECK(exact_conditional(1e3) == doctest::Approx(0.9999995).epsilon(1e-12));
  CHECK(exact_conditional(-kKappaMax) == exact_conditional(kKappaMax));

  // Same number through the Schur-complement route.
  const GaussianState s = apply_map(apply_map(coherent_init(2), qnd_map(2, 1, kKappaMax)),
                                    qnd_map(2, 2, kKappaMax));
  const GaussianState c = condition_on(s, pulse(1), Quadrature::Y, 0.4);
  CHECK(std::abs(marginal(c, pulse(2)).var_y - exact_conditional(kKappaMax)) < 1e-12);
}

TEST_CASE("squeezing_db") {
  const Squeezing ideal = squeezing_db(exact_conditional(kKappaMax), kKappaMax);
  CHECK_FALSE(ideal.infinite);
  CHECK(ideal.db == doctest::Approx(1.412615906220901).epsilon(1e-12));
  CHECK(ideal.db == doctest::Approx(10 * std::log10(1 + kKappaMax * kKappaMax)).epsilon(1e-12));
  CHECK(ideal.db > 0.3);
  CHECK(ideal.db < 4.2);

  CHECK(squeezing_db(0.5 * (1 + kKappaMax * kKappaMax), kKappaMax).db ==
        doctest::Approx(0.0).epsilon(1e-12));

  // 1.8 dB at kappa = 0.62 inverts to sigma_cond - 1/2 = 0.1922 / 10^0.18.
  CHECK(sigma_cond_from_db(1.8, kKappaMax) - 0.5 ==
        doctest::Approx(0.12698528070705994).epsilon(1e-12));
  CHECK(squeezing_db(sigma_cond_from_db(1.8, kKappaMax), kKappaMax).db ==
        doctest::Approx(1.8).epsilon(1e-12));

  double previous = squeezing_db(0.5001, kKappaMax).db;
  for (int i = 2; i <= 200; ++i) {
    const double db = squeezing_db(0.5 + 0.0001 * i * i, kKappaMax).db;
    CHECK(db < previous);
    previous = db;
  }

  CHECK(squeezing_db(0.5, kKappaMax).infinite);
  CHECK(squeezing_db(0.45, kKappaMax).infinite);
  CHECK_THROWS_AS(squeezing_db(0.6, 0.0), std::invalid_argument);
}

TEST_CASE("binned_conditional") {
  const auto flat = shots(0.0, SequenceMode::QndCondition, 2600, 41);
  const ConditionalResult c0 = binned_conditional(flat);
  CHECK(c0.n_bins == 21);
  CHECK(c0.bin_edges.size() == 22);
  CHECK(c0.per_bin.size() == 21);
  CHECK(std::abs(c0.sigma_cond - 0.5) < 3 * c0.se_cond);
  CHECK_FALSE(c0.squeezing.has_value());
  std::size_t total = 0;
  for (const BinStat& b : c0.per_bin) total += b.count;
  CHECK(total == c0.n_used);
  CHECK(total <= flat.size());
  // +-2.5 sigma keeps ~98.8% of Gaussian data.
  CHECK(c0.n_used > 0.97 * flat.size());

  const auto qnd = shots(kKappaMax, SequenceMode::QndCondition, 2600, 42);
  const ConditionalResult c = binned_conditional(qnd);
  CHECK(std::abs(c.sigma_cond - exact_conditional(kKappaMax)) < 3 * c.se_cond);
  REQUIRE(c.squeezing.has_value());
  const VarianceSummary v = variances(qnd);
  CHECK(c.sigma_cond <= v.sigma2 + 3 * v.se_sigma2);

  const auto re = shots(kKappaMax, SequenceMode::Reinitialized, 2600, 43);
  const ConditionalResult cr = binned_conditional(re);
  const VarianceSummary vr = variances(re);
  CHECK(std::abs(cr.sigma_cond - 0.6922) < 3 * cr.se_cond);
  CHECK(std::abs(cr.sigma_cond - vr.sigma2) < 3 * cr.se_cond);

  BinningOptions uniform;
  uniform.weighting = BinWeighting::Uniform;
  const ConditionalResult cu = binned_conditional(qnd, uniform);
  CHECK(cu.sigma_cond != c.sigma_cond);
  CHECK(std::abs(cu.sigma_cond - exact_conditional(kKappaMax)) < 3 * cu.se_cond);
}

TEST_CASE("binned_conditional error paths") {
  const std::vector<ShotRecord> constant(100, ShotRecord{1.0, 2.0, 0, 0, 0.5});
  CHECK_THROWS_AS(binned_conditional(constant), InsufficientData);
  CHECK_THROWS_AS(binned_conditional(std::vector<ShotRecord>(1)), InsufficientData);

  // Five shots over 21 bins: no bin holds two.
  const std::vector<ShotRecord> sparse{
      {-1.0, 0, 0, 0, 0}, {-0.5, 0, 0, 0, 0}, {0.0, 0, 0, 0, 0}, {0.5, 0, 0, 0, 0},
      {1.0, 0, 0, 0, 0}};
  CHECK_THROWS_AS(binned_conditional(sparse), InsufficientData);

  BinningOptions bad;
  bad.n_bins = 0;
  CHECK_THROWS_AS(binned_conditional(constant, bad), std::invalid_argument);
}

TEST_CASE("reported standard errors are calibrated") {
  const TheoryVariances t = predict(SequenceMode::QndCondition, Basis::Y, kKappaMax);
  constexpr int kReps = 400;
  double sum_z = 0.0;
  double sum_z2 = 0.0;
  int beyond = 0;
  for (int rep = 0; rep < kReps; ++rep) {
    const VarianceSummary v =
        variances(shots(kKappaMax, SequenceMode::QndCondition, 2600, 1000 + rep));
    const double z = (v.sigma_plus - t.sigma_plus) / v.se_plus;
    sum_z += z;
    sum_z2 += z * z;
    if (std::abs(z) > 3.0) ++beyond;
  }
  const double mean = sum_z / kReps;
  const double sd = std::sqrt(sum_z2 / kReps - mean * mean);
  CHECK(std::abs(mean) < 0.2);
  CHECK(sd > 0.85);
  CHECK(sd < 1.15);
  CHECK(beyond <= 6);
}

TEST_CASE("binning bias vanishes with fine bins and many shots") {
  // Average many independent runs so the bias is resolved well below one
  // single-run standard error.
  BinningOptions fine;
  fine.n_bins = 101;
  constexpr int kRuns = 16;
  double dev = 0.0;
  double se = 0.0;
  for (int run = 0; run < kRuns; ++run) {
    const auto rs = shots(kKappaMax, SequenceMode::QndCondition, 100000, 44 + run);
    const ConditionalResult c = binned_conditional(rs, fine);
    dev += c.sigma_cond - exact_conditional(kKappaMax);
    se += c.se_cond;
  }
  dev /= kRuns;
  se /= kRuns;
  CHECK(std::abs(dev) < se);
}

TEST_CASE("predict matches the covariance-matrix route, including loss") {
  for (double kappa : {0.0, 0.3, kKappaMax, 1.7}) {
    for (double eta : {1.0, 0.907, 0.5}) {
      GaussianState s = coherent_init(2);
      s = apply_map(s, qnd_map(2, 1, kappa));
      s = apply_map(s, qnd_map(2, 2, kappa));
      s = apply_loss(apply_loss(s, pulse(1), eta), pulse(2), eta);
      const TheoryVariances t = predict(SequenceMode::QndCondition, Basis::Y, kappa, eta);
      const double v1 = s.covariance(pulse(1), Quadrature::Y, pulse(1), Quadrature::Y);
      const double c12 = s.covariance(pulse(1), Quadrature::Y, pulse(2), Quadrature::Y);
      CHECK(std::abs(t.sigma1 - v1) < 1e-12);
      CHECK(std::abs(t.sigma_plus - (v1 + c12)) < 1e-12);
      CHECK(std::abs(t.sigma_minus - (v1 - c12)) < 1e-12);
      const GaussianState c = condition_on(s, pulse(1), Quadrature::Y, 0.0);
      CHECK(std::abs(t.sigma_cond - marginal(c, pulse(2)).var_y) < 1e-12);
    }
  }
  const TheoryVariances z = predict(SequenceMode::QndCondition, Basis::Z, 2.0);
  CHECK(z.sigma1 == 0.5);
  CHECK(z.sigma_plus == 0.5);
}

TEST_CASE("bootstrap_ci") {
  const std::vector<ShotRecord> constant(40, ShotRecord{1.0, 2.0, 0, 0, 0});
  const Interval flat = bootstrap_ci(constant, "sigma1");
  CHECK(flat.low == 0.0);
  CHECK(flat.high == 0.0);

  // Width of a 68.3% interval ~ 2 SE = 2 sqrt(2/(n-1)) 0.5 = 0.0277.
  const auto data = gaussian_column(2600, 5);
  const Interval ci = bootstrap_ci(data, "sigma1");
  const double expected_width = 2.0 * std::sqrt(2.0 / 2599.0) * 0.5;
  CHECK(std::abs((ci.high - ci.low) / expected_width - 1.0) < 0.2);
  CHECK(ci.low < variances(data).sigma1);
  CHECK(ci.high > variances(data).sigma1);

  BootstrapOptions threaded;
  threaded.threads = 4;
  const Interval ci4 = bootstrap_ci(data, "sigma1", threaded);
  CHECK(ci4.low == ci.low);
  CHECK(ci4.high == ci.high);

  CHECK_THROWS_AS(bootstrap_ci(data, "kurtosis"), std::invalid_argument);
  CHECK_THROWS_AS(bootstrap_ci(std::vector<ShotRecord>(9), "sigma1"), InsufficientData);
}

TEST_CASE("bootstrap interval coverage is close to the nominal 68.3%") {
  constexpr int kRepetitions = 500;
  constexpr std::size_t kN = 500;
  int covered = 0;
  for (int rep = 0; rep < kRepetitions; ++rep) {
    const auto data = gaussian_column(kN, 1000 + static_cast<std::uint64_t>(rep));
    BootstrapOptions o;
    o.seed = static_cast<std::uint64_t>(rep);
    const Interval ci = bootstrap_ci(data, Estimator::Sigma1, o);
    covered += ci.low <= 0.5 && 0.5 <= ci.high;
  }
  const double coverage = 100.0 * covered / kRepetitions;
  CAPTURE(coverage);
  CHECK(std::abs(coverage - 68.3) <= 5.0);
}

TEST_CASE("JSON summaries carry every field") {
  const auto rs = shots(kKappaMax, SequenceMode::QndCondition, 2600, 45);
  const nlohmann::json v = to_json(variances(rs));
  for (const char* key : {"sigma1", "sigma2", "sigma_plus", "sigma_minus", "se_sigma1",
                          "se_sigma2", "se_plus", "se_minus", "n"}) {
    CHECK(v.contains(key));
  }
  const nlohmann::json c = to_json(binned_conditional(rs));
  for (const char* key : {"sigma_cond", "se_cond", "n_bins", "bin_edges", "per_bin",
                          "squeezing_db", "n_used"}) {
    CHECK(c.contains(key));
  }
  CHECK(c["squeezing"] == "finite");
}
