#include "qnd/physics.hpp"

#include "json_util.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qnd {

namespace {

constexpr double kTwoPiMHz = 2.0 * std::numbers::pi * 1e6;
constexpr std::string_view kSheet = "physics sheet";

}  // namespace

AtomicParams AtomicParams::from_lab_units(double gamma_2pi_mhz, double sigma0_m2,
                                          double delta_2pi_mhz, double delta0_2pi_mhz,
                                          double waist_um, double J, double sigmaJ) {
  AtomicParams p;
  p.gamma = gamma_2pi_mhz * kTwoPiMHz;
  p.sigma0 = sigma0_m2;
  p.delta = delta_2pi_mhz * kTwoPiMHz;
  p.delta0 = delta0_2pi_mhz * kTwoPiMHz;
  p.waist = waist_um / 1e6;
  p.J = J;
  p.sigmaJ = sigmaJ;
  return p;
}

void AtomicParams::validate() const {
  if (!(gamma > 0.0)) throw std::invalid_argument("AtomicParams: gamma must be positive");
  if (!(sigma0 > 0.0)) throw std::invalid_argument("AtomicParams: sigma0 must be positive");
  if (!(waist > 0.0)) throw std::invalid_argument("AtomicParams: waist must be positive");
  if (!(J > 0.0)) throw std::invalid_argument("AtomicParams: J must be positive");
  if (!(sigmaJ >= 0.0)) throw std::invalid_argument("AtomicParams: sigmaJ must be non-negative");
  if (!std::isfinite(delta) || !std::isfinite(delta0)) {
    throw std::invalid_argument("AtomicParams: detunings must be finite");
  }
}

void PulseParams::validate() const {
  if (!(photons >= 0.0)) throw std::invalid_argument("PulseParams: photons must be non-negative");
  if (!(width > 0.0)) throw std::invalid_argument("PulseParams: width must be positive");
  if (!(interval >= 0.0)) throw std::invalid_argument("PulseParams: interval must be non-negative");
  if (!(absorption_rate >= 0.0)) {
    throw std::invalid_argument("PulseParams: absorption rate must be non-negative");
  }
}

double detuning_factor(double gamma, double delta, double delta0) {
  const double half_width_sq = 0.25 * gamma * gamma;
  const double d1 = delta - delta0;
  return d1 / (d1 * d1 + half_width_sq) - delta / (delta * delta + half_width_sq);
}

double coupling_strength(const AtomicParams& atomic, const PulseParams& pulse) {
  if (!(atomic.waist > 0.0)) {
    throw std::invalid_argument("coupling_strength: waist must be positive");
  }
  atomic.validate();
  pulse.validate();
  const double prefactor = atomic.gamma * atomic.sigma0 * std::sqrt(pulse.S() * atomic.J) /
                           (3.0 * std::numbers::pi * atomic.waist * atomic.waist);
  return prefactor * detuning_factor(atomic.gamma, atomic.delta, atomic.delta0);
}

double faraday_angle(double kappa, double S, double J) {
  if (!(S > 0.0) || !(J > 0.0)) {
    throw std::invalid_argument("faraday_angle: S and J must be positive");
  }
  return 0.5 * kappa * std::sqrt(J / S);
}

double kappa_from_angle(double phi, double S, double J) {
  if (!(S > 0.0) || !(J > 0.0)) {
    throw std::invalid_argument("kappa_from_angle: S and J must be positive");
  }
  return 2.0 * phi * std::sqrt(S / J);
}

double loss_parameter(double absorption_rate, double width) {
  if (!(absorption_rate >= 0.0) || !(width >= 0.0)) {
    throw std::invalid_argument("loss_parameter: inputs must be non-negative");
  }
  return 0.5 * absorption_rate * width;
}

DerivedCoupling derive_coupling(const AtomicParams& atomic, const PulseParams& pulse) {
  DerivedCoupling out;
  out.kappa = coupling_strength(atomic, pulse);
  out.phi = pulse.S() > 0.0 ? faraday_angle(out.kappa, pulse.S(), atomic.J) : 0.0;
  out.epsilon = loss_parameter(pulse.absorption_rate, pulse.width);
  return out;
}

PhysicsSheet parse_physics_sheet(std::string_view json_text) {
  const nlohmann::json doc = detail::parse_json(json_text, kSheet);
  if (!doc.is_object()) {
    throw ConfigError("physics sheet: top level must be an object");
  }
  // Read keys in document order so the first missing one is reported.
  const double gamma = detail::number_at(doc, "gamma_2pi_mhz", kSheet);
  const double sigma0 = detail::number_at(doc, "sigma0_m2", kSheet);
  const double delta = detail::number_at(doc, "delta_2pi_mhz", kSheet);
  const double delta0 = detail::number_at(doc, "delta0_2pi_mhz", kSheet);
  const double waist = detail::number_at(doc, "waist_um", kSheet);
  const double J = detail::number_at(doc, "J", kSheet);
  const double sigmaJ = detail::number_or(doc, "sigmaJ", 0.0, kSheet);
  PhysicsSheet sheet;
  sheet.atomic = AtomicParams::from_lab_units(gamma, sigma0, delta, delta0, waist, J, sigmaJ);
  sheet.pulse.width = detail::number_or(doc, "pulse_width_ns", 100.0, kSheet) / 1e9;
  sheet.pulse.interval = detail::number_or(doc, "pulse_interval_us", 15.0, kSheet) / 1e6;
  sheet.pulse.absorption_rate = detail::number_or(doc, "absorption_rate_per_s", 0.0, kSheet);
  sheet.pulse.photons = detail::number_or(doc, "photons", 0.0, kSheet);
  try {
    sheet.atomic.validate();
    sheet.pulse.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("physics sheet: ") + e.what());
  }
  return sheet;
}

PhysicsSheet load_physics_sheet(const std::filesystem::path& path) {
  try {
    return parse_physics_sheet(detail::read_text_file(path));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace qnd
