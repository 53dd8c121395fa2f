#include "qnd/errors.hpp"
#include "qnd/physics.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace qnd;

namespace {

AtomicParams yb171() {
  return AtomicParams::from_lab_units(29.0, 7.6e-14, 160.0, 320.0, 58.0, 3.4e5, 2.4e4);
}

PulseParams pulse_with(double photons) {
  PulseParams p;
  p.photons = photons;
  return p;
}

// Standalone evaluation in MHz units: the 2 pi factors of Gamma and of the
// detunings cancel, leaving gamma_MHz * bracket_MHz.
double kappa_mhz_units(double g, double d, double d0, double sigma0, double w, double S,
                       double J) {
  const double h = g / 2;
  const double bracket = (d - d0) / ((d - d0) * (d - d0) + h * h) - d / (d * d + h * h);
  return g * sigma0 * std::sqrt(S * J) / (3 * std::numbers::pi * w * w) * bracket;
}

}  // namespace

TEST_CASE("coupling_strength reproduces the Yb-171 operating point") {
  const double kappa = coupling_strength(yb171(), pulse_with(3.2e6));
  CHECK(kappa < 0.0);
  CHECK(std::abs(std::abs(kappa) - 0.62) <= 0.062);
  // Frozen from the MHz-unit evaluation above.
  const double oracle = kappa_mhz_units(29, 160, 320, 7.6e-14, 58e-6, 1.6e6, 3.4e5);
  CHECK(oracle == doctest::Approx(-0.6356846032661904).epsilon(1e-12));
  CHECK(kappa == doctest::Approx(oracle).epsilon(1e-12));

  CHECK(coupling_strength(yb171(), pulse_with(0.0)) == 0.0);
}

TEST_CASE("coupling_strength at the two-line centre") {
  AtomicParams a = yb171();
  a.delta = 0.5 * a.delta0;
  const double kappa = coupling_strength(a, pulse_with(3.2e6));
  // delta = delta0/2: bracket = -2 delta / (delta^2 + (Gamma/2)^2).
  const double oracle = kappa_mhz_units(29, 160, 320, 7.6e-14, 58e-6, 1.6e6, 3.4e5);
  CHECK(kappa == doctest::Approx(oracle).epsilon(1e-12));
  const double g = a.gamma;
  const double d = a.delta;
  CHECK(detuning_factor(g, d, a.delta0) ==
        doctest::Approx(-2.0 * d / (d * d + 0.25 * g * g)).epsilon(1e-14));
}

TEST_CASE("coupling_strength rejects bad geometry") {
  AtomicParams a = yb171();
  a.waist = 0.0;
  CHECK_THROWS_AS(coupling_strength(a, pulse_with(1e6)), std::invalid_argument);
  a = yb171();
  a.J = -1.0;
  CHECK_THROWS_AS(coupling_strength(a, pulse_with(1e6)), std::invalid_argument);
}

TEST_CASE("coupling_strength scaling laws") {
  const AtomicParams a = yb171();
  for (double photons : {1e3, 3.2e6, 7.7e8}) {
    CHECK(coupling_strength(a, pulse_with(4.0 * photons)) ==
          2.0 * coupling_strength(a, pulse_with(photons)));
  }
  AtomicParams doubled = a;
  doubled.J *= 2.0;
  const double ratio =
      coupling_strength(doubled, pulse_with(3.2e6)) / coupling_strength(a, pulse_with(3.2e6));
  CHECK(std::abs(ratio - std::sqrt(2.0)) < 1e-12 * std::sqrt(2.0));
}

TEST_CASE("detuning factor is symmetric about the two-line centre") {
  const AtomicParams a = yb171();
  const double centre = 0.5 * a.delta0;
  for (int i = -50; i <= 50; ++i) {
    const double x = i * 2.0 * std::numbers::pi * 7.3e6;
    const double lhs = detuning_factor(a.gamma, centre + x, a.delta0);
    const double rhs = detuning_factor(a.gamma, centre - x, a.delta0);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
  }
}

TEST_CASE("faraday_angle and kappa_from_angle") {
  CHECK(faraday_angle(0.62, 1.6e6, 3.4e5) == doctest::Approx(0.14290293908803975).epsilon(1e-12));
  CHECK(std::abs(faraday_angle(0.62, 1.6e6, 3.4e5) - 0.143) < 0.001);
  CHECK(faraday_angle(0.0, 1.6e6, 3.4e5) == 0.0);
  CHECK(faraday_angle(0.8, 5.0, 5.0) == 0.4);

  // 2 * 0.143 * sqrt(1.6e6 / 3.4e5) = 0.6204211...
  CHECK(kappa_from_angle(0.143, 1.6e6, 3.4e5) ==
        doctest::Approx(0.6204211093613565).epsilon(1e-12));
  CHECK(kappa_from_angle(0.0, 1.0, 2.0) == 0.0);

  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> kappa(-3.0, 3.0);
  std::uniform_real_distribution<double> logn(0.0, 9.0);
  for (int i = 0; i < 1000; ++i) {
    const double k = kappa(gen);
    const double S = std::pow(10.0, logn(gen));
    const double J = std::pow(10.0, logn(gen));
    const double back = kappa_from_angle(faraday_angle(k, S, J), S, J);
    CHECK(std::abs(back - k) <= 1e-12 * std::max(1.0, std::abs(k)));
  }

  CHECK_THROWS_AS(faraday_angle(0.1, 0.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(faraday_angle(0.1, 1.0, -1.0), std::invalid_argument);
  CHECK_THROWS_AS(kappa_from_angle(0.1, -1.0, 1.0), std::invalid_argument);
}

TEST_CASE("loss_parameter") {
  CHECK(loss_parameter(1.86e6, 100.0 / 1e9) == doctest::Approx(0.093).epsilon(1e-15));
  CHECK(loss_parameter(0.0, 1e-7) == 0.0);
  CHECK(loss_parameter(2.0, 0.5) == 0.5);
  CHECK_THROWS_AS(loss_parameter(-1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(loss_parameter(1.0, -1.0), std::invalid_argument);
}

TEST_CASE("derive_coupling keeps kappa and phi consistent") {
  const DerivedCoupling d = derive_coupling(yb171(), pulse_with(3.2e6));
  CHECK(std::abs(d.phi - 0.5 * d.kappa * std::sqrt(3.4e5 / 1.6e6)) < 1e-9);
  const DerivedCoupling none = derive_coupling(yb171(), pulse_with(0.0));
  CHECK(none.kappa == 0.0);
  CHECK(none.phi == 0.0);
}

TEST_CASE("physics sheet parsing") {
  const PhysicsSheet sheet = parse_physics_sheet(R"({
    "gamma_2pi_mhz": 29, "sigma0_m2": 7.6e-14, "delta_2pi_mhz": 160,
    "delta0_2pi_mhz": 320, "waist_um": 58, "J": 3.4e5, "sigmaJ": 2.4e4,
    "pulse_width_ns": 100, "absorption_rate_per_s": 1.86e6 })");
  CHECK(sheet.atomic.gamma == doctest::Approx(2.0 * std::numbers::pi * 29e6));
  CHECK(sheet.atomic.waist == doctest::Approx(58e-6));
  CHECK(sheet.pulse.width == doctest::Approx(1e-7));
  CHECK(loss_parameter(sheet.pulse.absorption_rate, sheet.pulse.width) ==
        doctest::Approx(0.093).epsilon(1e-15));

  try {
    parse_physics_sheet(R"({"gamma_2pi_mhz": 29})");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("sigma0_m2") != std::string::npos);
  }
  try {
    parse_physics_sheet("{\n  \"gamma_2pi_mhz\": 29,\n  \"waist_um\": ]\n}");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_physics_sheet(R"({
    "gamma_2pi_mhz": 29, "sigma0_m2": 7.6e-14, "delta_2pi_mhz": 160,
    "delta0_2pi_mhz": 320, "waist_um": 0, "J": 3.4e5 })"),
                  ConfigError);
  CHECK_THROWS_AS(parse_physics_sheet(R"({
    "gamma_2pi_mhz": "29", "sigma0_m2": 7.6e-14, "delta_2pi_mhz": 160,
    "delta0_2pi_mhz": 320, "waist_um": 58, "J": 3.4e5 })"),
                  ConfigError);
}
