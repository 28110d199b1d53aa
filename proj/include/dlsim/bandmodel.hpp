#pragma once

#include <cmath>
#include <numbers>

#include "dlsim/band_matrix.hpp"
#include "dlsim/errors.hpp"
#include "dlsim/units.hpp"

namespace dlsim {

/// Band-space Hamiltonian of a one-dimensional lattice as a function of the
/// crystal momentum kappa, Hermitian everywhere, in atomic units. N is the
/// band count, or kDynamic for models sized at run time.
///
/// Periodicity holds up to the orbital embedding: with G = 2*pi/a_L,
/// H(kappa + G) = V H(kappa) V^dagger for the unitary V returned by
/// zone_boundary_unitary(). Spectra and every projected observable are
/// therefore G-periodic; V is the identity when the orbitals sit on the
/// lattice sites.
template <int N>
class BandModel {
 public:
  using Matrix = BandMatrix<N>;
  static constexpr int kDim = N;

  virtual ~BandModel() = default;

  virtual int n_bands() const = 0;
  virtual double lattice_constant() const = 0;
  virtual Matrix hamiltonian_at(double kappa) const = 0;
  virtual Matrix hamiltonian_derivative_at(double kappa) const = 0;
  virtual Matrix zone_boundary_unitary() const { return Matrix::Identity(n_bands(), n_bands()); }

  double reciprocal_period() const { return 2.0 * std::numbers::pi / lattice_constant(); }
};

/// Dimer-chain parameters in laboratory units (Angstrom, eV).
struct DimerChainParams {
  double a_L_angstrom = 5.65;
  double delta_eV = 1.52;
  double t_H_eV = 1.58;

  void validate() const {
    if (!(a_L_angstrom > 0.0)) throw Error(ErrorCode::InvalidArgument, "a_L must be positive");
    if (!(t_H_eV > 0.0)) throw Error(ErrorCode::InvalidArgument, "t_H must be positive");
    if (!(delta_eV >= 0.0)) throw Error(ErrorCode::InvalidArgument, "delta must be non-negative");
  }

  double a_L() const { return units::angstrom_to_au(a_L_angstrom); }
  double delta() const { return units::eV_to_au(delta_eV); }
  double t_H() const { return units::eV_to_au(t_H_eV); }
};

inline BandMatrix<2> dimer_hamiltonian(const DimerChainParams& p, double kappa) {
  const double half_gap = 0.5 * p.delta();
  const double hop = -2.0 * p.t_H() * std::cos(0.5 * p.a_L() * kappa);
  BandMatrix<2> h;
  h << -half_gap, hop, hop, half_gap;
  return h;
}

inline BandMatrix<2> dimer_hamiltonian_derivative(const DimerChainParams& p, double kappa) {
  const double a = p.a_L();
  const double dhop = p.t_H() * a * std::sin(0.5 * a * kappa);
  BandMatrix<2> h;
  h << 0.0, dhop, dhop, 0.0;
  return h;
}

class DimerChain final : public BandModel<2> {
 public:
  explicit DimerChain(DimerChainParams p = {}) : params_(p) { params_.validate(); }

  int n_bands() const override { return 2; }
  double lattice_constant() const override { return params_.a_L(); }
  Matrix hamiltonian_at(double kappa) const override { return dimer_hamiltonian(params_, kappa); }
  Matrix hamiltonian_derivative_at(double kappa) const override {
    return dimer_hamiltonian_derivative(params_, kappa);
  }

  /// The second orbital sits half a cell from the first, so a shift by G
  /// flips its phase: V = diag(1, -1).
  Matrix zone_boundary_unitary() const override { return Eigen::Vector2cd(1.0, -1.0).asDiagonal(); }

  const DimerChainParams& params() const { return params_; }

  /// Analytic electron-hole reduced mass at the direct gap kappa = pi/a_L,
  /// from the curvature of eps_c - eps_v: 1/m* = 4 t_H^2 a_L^2 / Delta.
  double analytic_reduced_mass() const {
    const double t = params_.t_H();
    const double a = params_.a_L();
    return params_.delta() / (4.0 * t * t * a * a);
  }

 private:
  DimerChainParams params_;
};

/// K(t) = k + e A(t) / hbar in atomic units.
inline double shifted_wavevector(double k, double vector_potential) { return k + vector_potential; }

}  // namespace dlsim
