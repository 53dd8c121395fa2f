#pragma once

// Laboratory parameters -> dimensionless Faraday coupling.
//
// All frequencies are angular (rad/s), lengths in metres, times in seconds.
// The "2pi x MHz" numbers quoted in lab notes are converted on construction.

#include <filesystem>
#include <string>
#include <string_view>

namespace qnd {

struct AtomicParams {
  double gamma = 0.0;   // natural full linewidth, rad/s
  double sigma0 = 0.0;  // absorption cross section, m^2
  double delta = 0.0;   // detuning from the F'=3/2 line, rad/s
  double delta0 = 0.0;  // F'=1/2 <-> F'=3/2 splitting, rad/s
  double waist = 0.0;   // beam waist w0, m
  double J = 0.0;       // collective spin N_A/2
  double sigmaJ = 0.0;  // shot-to-shot std of J

  static AtomicParams from_lab_units(double gamma_2pi_mhz, double sigma0_m2,
                                     double delta_2pi_mhz, double delta0_2pi_mhz,
                                     double waist_um, double J, double sigmaJ);

  /// Throws std::invalid_argument on a violated invariant.
  void validate() const;
};

struct PulseParams {
  double photons = 0.0;          // mean photon number N_L
  double width = 100e-9;         // s
  double interval = 15e-6;       // s
  double absorption_rate = 0.0;  // 1/s

  /// S = N_L / 2; derived, never stored.
  double S() const { return photons / 2.0; }

  void validate() const;
};

struct DerivedCoupling {
  double kappa = 0.0;    // signed
  double phi = 0.0;      // rad, signed like kappa
  double epsilon = 0.0;  // loss parameter r t / 2
};

/// Two-line dispersive factor of the Faraday coupling (units s/rad):
///   (d - d0)/((d - d0)^2 + (G/2)^2) - d/(d^2 + (G/2)^2).
double detuning_factor(double gamma, double delta, double delta0);

/// kappa = G sigma0 sqrt(S J) / (3 pi w0^2) * detuning_factor. Signed, no
/// clipping. photons = 0 gives kappa = 0.
double coupling_strength(const AtomicParams& atomic, const PulseParams& pulse);

/// phi = (kappa/2) sqrt(J/S).
double faraday_angle(double kappa, double S, double J);

/// kappa = 2 phi sqrt(S/J); inverse of faraday_angle.
double kappa_from_angle(double phi, double S, double J);

/// epsilon = r t / 2.
double loss_parameter(double absorption_rate, double width);

/// kappa, phi and epsilon evaluated together. phi is 0 when there are no
/// photons (kappa vanishes with S).
DerivedCoupling derive_coupling(const AtomicParams& atomic, const PulseParams& pulse);

/// Parameter sheet: atomic constants plus pulse timing. The photon number is
/// left at zero unless the sheet sets "photons".
struct PhysicsSheet {
  AtomicParams atomic;
  PulseParams pulse;
};

/// Parses a JSON sheet with unit-suffixed keys:
///   gamma_2pi_mhz, sigma0_m2, delta_2pi_mhz, delta0_2pi_mhz, waist_um, J,
///   sigmaJ, pulse_width_ns, pulse_interval_us, absorption_rate_per_s,
///   photons (optional).
/// Throws ConfigError naming the offending key, or the line/column of a
/// syntax error.
PhysicsSheet parse_physics_sheet(std::string_view json_text);
PhysicsSheet load_physics_sheet(const std::filesystem::path& path);

}  // namespace qnd
