#include "qnd/gaussian.hpp"

#include "qnd/errors.hpp"

#include <algorithm>
#include <complex>
#include <set>

namespace qnd {

namespace {

void check_physical(const std::vector<ModeLabel>& modes, const Eigen::VectorXd& mean,
                    const Eigen::MatrixXd& cov) {
  const auto dim = static_cast<Eigen::Index>(2 * modes.size());
  if (mean.size() != dim || cov.rows() != dim || cov.cols() != dim) {
    throw std::invalid_argument("GaussianState: mean/cov dimension does not match 2 x modes");
  }
  if (std::set<ModeLabel>(modes.begin(), modes.end()).size() != modes.size()) {
    throw std::invalid_argument("GaussianState: duplicate mode label");
  }
  if (!mean.allFinite() || !cov.allFinite()) {
    throw std::invalid_argument("GaussianState: non-finite entry");
  }
  if (dim == 0) return;
  if ((cov - cov.transpose()).cwiseAbs().maxCoeff() > kSymmetryTolerance) {
    throw std::invalid_argument("GaussianState: covariance not symmetric");
  }
  for (Eigen::Index k = 0; k < dim; k += 2) {
    const double det = cov(k, k) * cov(k + 1, k + 1) - cov(k, k + 1) * cov(k + 1, k);
    if (det < 0.25 - kUncertaintyTolerance) {
      throw std::invalid_argument("GaussianState: mode violates the uncertainty bound");
    }
  }
  // cov + (i/2) Omega must be positive semidefinite.
  const Eigen::MatrixXcd hermitian =
      cov.cast<std::complex<double>>() +
      std::complex<double>(0.0, 0.5) * canonical_form(dim / 2).cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(hermitian, Eigen::EigenvaluesOnly);
  if (solver.eigenvalues().minCoeff() < -kUncertaintyTolerance) {
    throw std::invalid_argument("GaussianState: covariance is not a physical state");
  }
}

}  // namespace

Eigen::MatrixXd canonical_form(Eigen::Index n_modes) {
  Eigen::MatrixXd omega = Eigen::MatrixXd::Zero(2 * n_modes, 2 * n_modes);
  for (Eigen::Index k = 0; k < n_modes; ++k) {
    omega(2 * k, 2 * k + 1) = 1.0;
    omega(2 * k + 1, 2 * k) = -1.0;
  }
  return omega;
}

SymplecticMap::SymplecticMap(Eigen::MatrixXd matrix) : matrix_(std::move(matrix)) {
  if (matrix_.rows() != matrix_.cols() || matrix_.rows() % 2 != 0 || matrix_.rows() == 0) {
    throw std::invalid_argument("SymplecticMap: matrix must be square with even dimension");
  }
  if (!(symplectic_defect() < kSymplecticTolerance)) {
    throw std::invalid_argument("SymplecticMap: matrix is not symplectic");
  }
}

double SymplecticMap::symplectic_defect() const {
  const Eigen::MatrixXd omega = canonical_form(matrix_.rows() / 2);
  return (matrix_ * omega * matrix_.transpose() - omega).cwiseAbs().maxCoeff();
}

GaussianState::GaussianState(std::vector<ModeLabel> modes, Eigen::VectorXd mean,
                             Eigen::MatrixXd cov)
    : modes_(std::move(modes)), mean_(std::move(mean)), cov_(std::move(cov)) {
  check_physical(modes_, mean_, cov_);
}

bool GaussianState::has_mode(ModeLabel label) const {
  return std::find(modes_.begin(), modes_.end(), label) != modes_.end();
}

Eigen::Index GaussianState::offset(ModeLabel label) const {
  const auto it = std::find(modes_.begin(), modes_.end(), label);
  if (it == modes_.end()) {
    throw std::invalid_argument("GaussianState: unknown mode");
  }
  return 2 * static_cast<Eigen::Index>(it - modes_.begin());
}

double GaussianState::covariance(ModeLabel a, Quadrature qa, ModeLabel b, Quadrature qb) const {
  return cov_(index(a, qa), index(b, qb));
}

GaussianState coherent_init(int n_pulses) {
  if (n_pulses < 1) {
    throw std::invalid_argument("coherent_init: need at least one pulse");
  }
  std::vector<ModeLabel> modes{kAtom};
  for (int i = 1; i <= n_pulses; ++i) {
    modes.push_back(pulse(static_cast<unsigned>(i)));
  }
  const Eigen::Index dim = 2 * (n_pulses + 1);
  return GaussianState(std::move(modes), Eigen::VectorXd::Zero(dim),
                       0.5 * Eigen::MatrixXd::Identity(dim, dim));
}

SymplecticMap qnd_map(int n_pulses, int pulse_index, double kappa) {
  if (n_pulses < 1 || pulse_index < 1 || pulse_index > n_pulses) {
    throw std::invalid_argument("qnd_map: pulse index out of range");
  }
  const Eigen::Index dim = 2 * (n_pulses + 1);
  Eigen::MatrixXd f = Eigen::MatrixXd::Identity(dim, dim);
  const Eigen::Index atom_y = 0;
  const Eigen::Index atom_z = 1;
  const Eigen::Index light_y = 2 * pulse_index;
  const Eigen::Index light_z = light_y + 1;
  f(light_y, atom_z) = kappa;
  f(atom_y, light_z) = kappa;
  return SymplecticMap(std::move(f));
}

GaussianState apply_map(const GaussianState& state, const SymplecticMap& map) {
  if (map.dimension() != state.mean().size()) {
    throw std::invalid_argument("apply_map: dimension mismatch");
  }
  const Eigen::MatrixXd& f = map.matrix();
  Eigen::MatrixXd cov = f * state.cov() * f.transpose();
  // Restore exact symmetry lost to rounding in the triple product.
  cov = 0.5 * (cov + cov.transpose()).eval();
  return GaussianState(state.modes(), f * state.mean(), std::move(cov));
}

GaussianState apply_loss(const GaussianState& state, ModeLabel mode, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) {
    throw std::invalid_argument("apply_loss: eta must lie in [0, 1]");
  }
  const Eigen::Index k = state.offset(mode);
  Eigen::VectorXd mean = state.mean();
  Eigen::MatrixXd cov = state.cov();
  mean.segment(k, 2) *= eta;
  cov.middleRows(k, 2) *= eta;
  cov.middleCols(k, 2) *= eta;
  cov.block(k, k, 2, 2) += 0.5 * (1.0 - eta * eta) * Eigen::Matrix2d::Identity();
  return GaussianState(state.modes(), std::move(mean), std::move(cov));
}

GaussianState condition_on(const GaussianState& state, ModeLabel mode, Quadrature quadrature,
                           double value) {
  const Eigen::Index k = state.offset(mode);
  const Eigen::Index b = k + static_cast<Eigen::Index>(quadrature);
  const double var_b = state.cov()(b, b);
  if (!(var_b > kSingularVariance)) {
    throw SingularConditioning("condition_on: measured quadrature variance is singular");
  }

  std::vector<ModeLabel> kept_modes;
  std::vector<Eigen::Index> kept;
  for (const ModeLabel& m : state.modes()) {
    if (m == mode) continue;
    kept_modes.push_back(m);
    const Eigen::Index o = state.offset(m);
    kept.push_back(o);
    kept.push_back(o + 1);
  }
  const auto n = static_cast<Eigen::Index>(kept.size());
  Eigen::VectorXd mean(n);
  Eigen::VectorXd cross(n);  // Sigma_xb
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    mean(i) = state.mean()(kept[i]);
    cross(i) = state.cov()(kept[i], b);
    for (Eigen::Index j = 0; j < n; ++j) {
      cov(i, j) = state.cov()(kept[i], kept[j]);
    }
  }
  const Eigen::VectorXd gain = cross / var_b;
  mean += gain * (value - state.mean()(b));
  cov -= gain * cross.transpose();
  cov = 0.5 * (cov + cov.transpose()).eval();
  return GaussianState(std::move(kept_modes), std::move(mean), std::move(cov));
}

ModeMarginal marginal(const GaussianState& state, ModeLabel mode) {
  const Eigen::Index k = state.offset(mode);
  return ModeMarginal{state.mean()(k), state.mean()(k + 1), state.cov()(k, k),
                      state.cov()(k + 1, k + 1), state.cov()(k, k + 1)};
}

}  // namespace qnd
