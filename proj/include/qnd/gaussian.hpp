#pragma once

// Gaussian-state algebra for the linearized light-atom system.
//
// Every mode carries one canonical pair (y, z) with [y, z] = i, so coherent
// states have Var(y) = Var(z) = 1/2. The x components of the collective spin
// and of the Stokes vector are treated as classical constants; only (y, z)
// are dynamical.
//
// Phase-space ordering is fixed: the atom mode first, then light pulses in
// ordinal order, and within each mode (y, z). A state with n modes therefore
// has the coordinate vector (J_y, J_z, S1_y, S1_z, S2_y, S2_z, ...).

#include <Eigen/Dense>

#include <compare>
#include <cstddef>
#include <vector>

namespace qnd {

enum class ModeKind { Atom, LightPulse };

struct ModeLabel {
  ModeKind kind = ModeKind::Atom;
  unsigned index = 0;  // pulse ordinal (1-based); the atom mode uses 0

  friend auto operator<=>(const ModeLabel&, const ModeLabel&) = default;
};

inline constexpr ModeLabel kAtom{ModeKind::Atom, 0};

constexpr ModeLabel pulse(unsigned ordinal) {
  return ModeLabel{ModeKind::LightPulse, ordinal};
}

enum class Quadrature { Y = 0, Z = 1 };

struct ModeMarginal {
  double mean_y = 0.0;
  double mean_z = 0.0;
  double var_y = 0.0;
  double var_z = 0.0;
  double cov_yz = 0.0;
};

inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr double kUncertaintyTolerance = 1e-9;
inline constexpr double kSymplecticTolerance = 1e-10;
inline constexpr double kSingularVariance = 1e-12;

/// Block-diagonal symplectic form with [[0, 1], [-1, 0]] per mode.
Eigen::MatrixXd canonical_form(Eigen::Index n_modes);

/// Linear phase-space map F with F Omega F^T = Omega.
class SymplecticMap {
 public:
  /// Throws std::invalid_argument if the matrix is not square, has odd
  /// dimension, or violates the symplectic condition.
  explicit SymplecticMap(Eigen::MatrixXd matrix);

  const Eigen::MatrixXd& matrix() const { return matrix_; }
  Eigen::Index dimension() const { return matrix_.rows(); }

  /// max |F Omega F^T - Omega|.
  double symplectic_defect() const;

 private:
  Eigen::MatrixXd matrix_;
};

/// Immutable joint light-atom Gaussian state.
///
/// Construction validates symmetry, per-mode uncertainty and the full
/// Robertson-Schroedinger condition cov + (i/2) Omega >= 0.
class GaussianState {
 public:
  GaussianState(std::vector<ModeLabel> modes, Eigen::VectorXd mean,
                Eigen::MatrixXd cov);

  const std::vector<ModeLabel>& modes() const { return modes_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const Eigen::MatrixXd& cov() const { return cov_; }
  std::size_t n_modes() const { return modes_.size(); }

  bool has_mode(ModeLabel label) const;
  /// Phase-space index of the y quadrature of `label`; z is the next index.
  /// Throws std::invalid_argument for an unknown label.
  Eigen::Index offset(ModeLabel label) const;
  Eigen::Index index(ModeLabel label, Quadrature q) const {
    return offset(label) + static_cast<Eigen::Index>(q);
  }

  /// Covariance between two quadratures, possibly of different modes.
  double covariance(ModeLabel a, Quadrature qa, ModeLabel b, Quadrature qb) const;

 private:
  std::vector<ModeLabel> modes_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd cov_;
};

/// One atom mode plus `n_pulses` light pulses, all coherent (vacuum-like).
GaussianState coherent_init(int n_pulses);

/// The Faraday QND map on the (atom, pulse) pair:
///   S_y += kappa J_z,  J_y += kappa S_z,  S_z and J_z unchanged.
/// kappa is signed; the map acts as identity on every other mode.
SymplecticMap qnd_map(int n_pulses, int pulse_index, double kappa);

GaussianState apply_map(const GaussianState& state, const SymplecticMap& map);

/// Attenuation with vacuum refill on one mode: amplitudes scale by eta,
/// Var -> eta^2 Var + (1 - eta^2)/2, cross-covariances scale by eta.
GaussianState apply_loss(const GaussianState& state, ModeLabel mode, double eta);

/// Conditions the state on an ideal measurement outcome of one quadrature and
/// drops the measured mode. Throws SingularConditioning when the measured
/// quadrature's variance is below kSingularVariance.
GaussianState condition_on(const GaussianState& state, ModeLabel mode,
                           Quadrature quadrature, double value);

ModeMarginal marginal(const GaussianState& state, ModeLabel mode);

}  // namespace qnd
