#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "dlsim/band_matrix.hpp"
#include "dlsim/bandmodel.hpp"
#include "dlsim/bases.hpp"
#include "dlsim/errors.hpp"
#include "dlsim/fields.hpp"
#include "dlsim/spectral.hpp"
#include "dlsim/units.hpp"

namespace dlsim {

template <int N>
using StateVector = BandVector<N>;
template <int N>
using DensityMatrix = BandMatrix<N>;

struct RelaxationParams {
  double T1_fs = 20.0;
  double T2_fs = 20.0;
  double mu_eV = 0.0;
  double Te_K = 0.0;

  void validate() const {
    if (!(T1_fs > 0.0) || !(T2_fs > 0.0))
      throw Error(ErrorCode::InvalidArgument, "relaxation times must be positive");
    if (!(Te_K >= 0.0)) throw Error(ErrorCode::InvalidArgument, "Te must be non-negative");
  }

  /// Relaxation switched off (infinite T1 and T2).
  static RelaxationParams none() {
    const double inf = std::numeric_limits<double>::infinity();
    return {inf, inf, 0.0, 0.0};
  }

  double rate1() const { return 1.0 / units::fs_to_au(T1_fs); }
  double rate2() const { return 1.0 / units::fs_to_au(T2_fs); }
  double mu() const { return units::eV_to_au(mu_eV); }
  double kT() const { return units::kelvin_to_au(Te_K); }
};

/// Uniform Brillouin-zone grid k_j = offset + 2 pi j / (a_L N), endpoint excluded.
struct KGrid {
  int n_k = 512;
  double a_L = 1.0;
  double offset = 0.0;

  KGrid(int n, double lattice_constant, double shift = 0.0) : n_k(n), a_L(lattice_constant), offset(shift) {
    if (n_k < 2) throw Error(ErrorCode::InvalidArgument, "KGrid needs at least 2 points");
    if (!(a_L > 0.0)) throw Error(ErrorCode::InvalidArgument, "KGrid lattice constant must be positive");
  }

  double spacing() const { return 2.0 * std::numbers::pi / (a_L * n_k); }
  double point(int j) const { return offset + spacing() * j; }
  std::vector<double> points() const {
    std::vector<double> out(n_k);
    for (int j = 0; j < n_k; ++j) out[j] = point(j);
    return out;
  }
};

/// exp(-i H dt) for Hermitian H. Closed form for two bands, spectral
/// decomposition otherwise.
template <int N>
BandMatrix<N> unitary_propagator(const BandMatrix<N>& h, double dt) {
  const int n = static_cast<int>(h.rows());
  if (n == 2) {
    const double mean = 0.5 * (h(0, 0).real() + h(1, 1).real());
    const double half = 0.5 * (h(0, 0).real() - h(1, 1).real());
    const cplx off = 0.5 * (h(0, 1) + std::conj(h(1, 0)));
    const double r = std::hypot(half, std::abs(off));
    const double c = std::cos(r * dt);
    // sin(r dt)/r, finite as r -> 0
    const double s = r > 1e-300 ? std::sin(r * dt) / r : dt;
    const cplx i(0.0, 1.0);
    BandMatrix<N> u(2, 2);
    u(0, 0) = c - i * s * half;
    u(1, 1) = c + i * s * half;
    u(0, 1) = -i * s * off;
    u(1, 0) = -i * s * std::conj(off);
    return std::polar(1.0, -mean * dt) * u;
  }
  const EigenSystem<N> es = eigensystem<N>(h);
  BandMatrix<N> phases = BandMatrix<N>::Zero(n, n);
  for (int b = 0; b < n; ++b) phases(b, b) = std::polar(1.0, -es.energies(b) * dt);
  return es.states * phases * es.states.adjoint();
}

/// Exponential-midpoint step of i d/dt psi = H(k + A(t)) psi.
template <int N>
StateVector<N> tdse_step(const StateVector<N>& psi, double k, double t, double dt, const BandModel<N>& model,
                         const Waveform& w) {
  const BandMatrix<N> h = model.hamiltonian_at(shifted_wavevector(k, w, t + 0.5 * dt));
  return unitary_propagator<N>(h, dt) * psi;
}

/// Valence Bloch state at label k: the initial condition of every run.
template <int N>
StateVector<N> valence_state(const BandModel<N>& model, double k) {
  return eigensystem<N>(model.hamiltonian_at(k)).states.col(0);
}

/// Fermi-Dirac occupation; the zero-temperature limit is a step with 1/2 at mu.
inline double fermi_dirac(double energy, double mu, double kT) {
  if (kT <= 0.0) {
    if (energy < mu) return 1.0;
    if (energy > mu) return 0.0;
    return 0.5;
  }
  const double x = (energy - mu) / kT;
  if (x > 0.0) {
    const double e = std::exp(-x);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(x));
}

namespace detail {

// D[rho] for reference states given as the columns of `ref` in the same
// representation as rho; a null `ref` means the identity.
template <int N>
DensityMatrix<N> relaxation_in(const DensityMatrix<N>& rho, const BandMatrix<N>* ref,
                               const RealBandVector<N>& energies, const RelaxationParams& p) {
  const double g1 = p.rate1();
  const double g2 = p.rate2();
  const int n = static_cast<int>(rho.rows());
  if (g1 == 0.0 && g2 == 0.0) return DensityMatrix<N>::Zero(n, n);
  DensityMatrix<N> in_ref = ref ? DensityMatrix<N>(ref->adjoint() * rho * *ref) : rho;
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a == b)
        in_ref(a, a) = -g1 * (in_ref(a, a) - fermi_dirac(energies(a), p.mu(), p.kT()));
      else
        in_ref(a, b) = -g2 * in_ref(a, b);
    }
  }
  return hermitian_part<N>(ref ? DensityMatrix<N>(*ref * in_ref * ref->adjoint()) : in_ref);
}

}  // namespace detail

/// Relaxation-time dissipator: populations in the reference basis decay to
/// their Fermi-Dirac targets at 1/T1, coherences at 1/T2. Uses only the
/// projectors of the reference states, so their phases do not matter.
template <int N>
DensityMatrix<N> relaxation_apply(const DensityMatrix<N>& rho, const BasisSnapshot<N>& basis,
                                  const RelaxationParams& p) {
  return detail::relaxation_in<N>(rho, &basis.states, basis.energies, p);
}

/// -i[H, rho] + D[rho] in the orbital representation.
template <int N>
DensityMatrix<N> master_rhs(const DensityMatrix<N>& rho, const BandMatrix<N>& h, const BasisSnapshot<N>& basis,
                            const RelaxationParams& p) {
  const cplx minus_i(0.0, -1.0);
  return minus_i * (h * rho - rho * h) + relaxation_apply<N>(rho, basis, p);
}

/// Density matrix at one k, held in the transported adiabatic frame u^A(K(t))
/// rather than the orbital basis. The two are related by rho_orb = U rho U^+,
/// but in the frame the small conduction populations and coherences keep
/// full relative precision instead of sitting next to O(1) orbital entries.
template <int N>
struct MasterState {
  DensityMatrix<N> rho;
  BasisSnapshot<N> frame;      // Houston snapshot
  BasisSnapshot<N> reference;  // relaxation reference, any kind
  /// max|rho - rho^+| of the last RK4 update before re-symmetrization.
  double non_hermiticity = 0.0;

  double t() const { return frame.t; }
  double k() const { return frame.k; }
  DensityMatrix<N> orbital() const { return frame.states * rho * frame.states.adjoint(); }
};

namespace detail {

// Snapshot states expressed in the frame. Houston snapshots coincide with
// the frame; polarized ones carry their coefficients on the same transported
// adiabatic states.
template <int N>
BandMatrix<N> in_frame(const BasisSnapshot<N>& frame, const BasisSnapshot<N>& snap) {
  switch (snap.kind) {
    case BasisKind::Houston: return BandMatrix<N>::Identity(frame.dim(), frame.dim());
    case BasisKind::PolarizedHouston:
      if (max_abs<N>(snap.adiabatic - frame.states) > 1e-12)
        throw Error(ErrorCode::InvalidArgument, "polarized snapshot drifted from the master frame");
      return snap.coefficients;
    case BasisKind::Bloch: break;
  }
  return frame.states.adjoint() * snap.states;
}

template <int N>
DensityMatrix<N> frame_rhs(const DensityMatrix<N>& rho, const BandMatrix<N>& heff, const BasisSnapshot<N>& frame,
                           const BasisSnapshot<N>& ref, const RelaxationParams& p) {
  const cplx minus_i(0.0, -1.0);
  DensityMatrix<N> out = minus_i * (heff * rho - rho * heff);
  if (ref.kind == BasisKind::Houston) {
    out += relaxation_in<N>(rho, nullptr, ref.energies, p);
  } else {
    const BandMatrix<N> r = in_frame(frame, ref);
    out += relaxation_in<N>(rho, &r, ref.energies, p);
  }
  return out;
}

}  // namespace detail

/// Starts from the filled valence Bloch state at label k.
template <int N>
MasterState<N> master_initial(BasisKind kind, const BandModel<N>& model, const Waveform& w, double k, double t0) {
  BasisSnapshot<N> frame = houston_initial(model, w, k, t0);
  const int n = frame.dim();
  DensityMatrix<N> rho = DensityMatrix<N>::Zero(n, n);
  if (frame.kappa == k) {
    rho(0, 0) = 1.0;
  } else {
    const BandVector<N> v = frame.states.adjoint() * valence_state(model, k);
    rho = v * v.adjoint();
  }
  BasisSnapshot<N> ref = initial_snapshot(kind, model, w, k, t0);
  return {rho, std::move(frame), std::move(ref)};
}

/// Frame snapshots and effective Hamiltonians at the three RK4 sample times
/// of one step. They depend only on k, so density matrices relaxing toward
/// different references at the same k can share them.
template <int N>
struct MasterFrames {
  BasisSnapshot<N> half;
  BasisSnapshot<N> full;
  BandMatrix<N> h0;
  BandMatrix<N> h_half;
  BandMatrix<N> h_full;
};

template <int N>
MasterFrames<N> master_frames(const BasisSnapshot<N>& frame, const BandModel<N>& model, const Waveform& w,
                              double dt) {
  const double t = frame.t;
  MasterFrames<N> f;
  f.half = houston_step(frame, model, w, 0.5 * dt);
  f.full = houston_step(f.half, model, w, 0.5 * dt);
  f.h0 = effective_hamiltonian(frame, model, w.E_at(t)).matrix;
  f.h_half = effective_hamiltonian(f.half, model, w.E_at(t + 0.5 * dt)).matrix;
  f.h_full = effective_hamiltonian(f.full, model, w.E_at(t + dt)).matrix;
  return f;
}

/// RK4 step of the master equation, carried out in the adiabatic frame where
/// the coherent part reads -i[H_eff, rho] with H_eff = eps + E d. The
/// reference is advanced through the same midpoint and endpoint the stages
/// sample.
template <int N>
MasterState<N> master_step(const MasterState<N>& state, const MasterFrames<N>& f, const BandModel<N>& model,
                           const Waveform& w, const RelaxationParams& p, double dt) {
  const bool own_ref = state.reference.kind != BasisKind::Houston;
  const BasisSnapshot<N> r_half = own_ref ? advance(state.reference, model, w, 0.5 * dt) : f.half;
  const BasisSnapshot<N> r_full = own_ref ? advance(r_half, model, w, 0.5 * dt) : f.full;

  const DensityMatrix<N>& rho = state.rho;
  const DensityMatrix<N> k1 = detail::frame_rhs<N>(rho, f.h0, state.frame, state.reference, p);
  const DensityMatrix<N> k2 = detail::frame_rhs<N>(rho + 0.5 * dt * k1, f.h_half, f.half, r_half, p);
  const DensityMatrix<N> k3 = detail::frame_rhs<N>(rho + 0.5 * dt * k2, f.h_half, f.half, r_half, p);
  const DensityMatrix<N> k4 = detail::frame_rhs<N>(rho + dt * k3, f.h_full, f.full, r_full, p);
  const DensityMatrix<N> next = rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  return {hermitian_part<N>(next), f.full, r_full, hermiticity_error<N>(next)};
}

template <int N>
MasterState<N> master_step(const MasterState<N>& state, const BandModel<N>& model, const Waveform& w,
                           const RelaxationParams& p, double dt) {
  return master_step(state, master_frames(state.frame, model, w, dt), model, w, p, dt);
}

/// Population of band b of `snap` for a master state, evaluated in the frame.
template <int N>
double frame_population(const MasterState<N>& s, const BasisSnapshot<N>& snap, int band) {
  BandVector<N> u;
  if (snap.kind == BasisKind::Houston)
    u = BandVector<N>::Unit(s.frame.dim(), band);
  else
    u = detail::in_frame(s.frame, snap).col(band);
  return std::real(u.dot(s.rho * u));
}

/// Smallest eigenvalue of a density matrix; the relaxation-time dissipator is
/// not guaranteed to keep rho positive, so runs monitor this.
template <int N>
double min_eigenvalue(const DensityMatrix<N>& rho) {
  return eigenvalues<N>(hermitian_part<N>(rho))(0);
}

/// Coefficient vector c in the transported adiabatic basis, evolved directly
/// by i dc/dt = H_eff(t) c (exponential midpoint). The length-gauge
/// counterpart of tdse_step.
template <int N>
struct CoefficientState {
  BandVector<N> c;
  BasisSnapshot<N> adiabatic;  // Houston snapshot
};

template <int N>
CoefficientState<N> coefficient_initial(const BandModel<N>& model, const Waveform& w, double k, double t0) {
  BasisSnapshot<N> snap = houston_initial(model, w, k, t0);
  BandVector<N> c = snap.states.adjoint() * valence_state(model, k);
  if (snap.kappa == k) c = BandVector<N>::Unit(snap.dim(), 0);
  return {c, snap};
}

template <int N>
CoefficientState<N> coefficient_step(const CoefficientState<N>& s, const BandModel<N>& model, const Waveform& w,
                                     double dt) {
  const BasisSnapshot<N> mid = houston_step(s.adiabatic, model, w, 0.5 * dt);
  const EffectiveHamiltonian<N> heff = effective_hamiltonian(mid, model, w.E_at(mid.t));
  BasisSnapshot<N> end = houston_step(mid, model, w, 0.5 * dt);
  return {unitary_propagator<N>(heff.matrix, dt) * s.c, std::move(end)};
}

// ---------------------------------------------------------------------------
// Semiconductor Bloch equations on a periodic k grid.

/// Central first-derivative weights for stencil orders 2, 4 and 6.
inline std::vector<double> central_difference_weights(int order) {
  switch (order) {
    case 2: return {1.0 / 2.0};
    case 4: return {2.0 / 3.0, -1.0 / 12.0};
    case 6: return {3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0};
    default: throw Error(ErrorCode::InvalidArgument, "stencil order must be 2, 4 or 6");
  }
}

/// Band-basis density matrices rho_{bb'}(K) on the grid K_j, in the canonical
/// gauge of each K_j. Band data are time independent and precomputed.
///
/// The stencil wraps around the zone. A neighbour across the boundary is
/// brought into the canonical gauge continued past it, using the model's
/// zone_boundary_unitary(); this assumes the canonical gauge is smooth in
/// kappa, which holds for the dimer chain.
template <int N>
class SbeSystem {
 public:
  using Matrix = DensityMatrix<N>;

  SbeSystem(const BandModel<N>& model, KGrid grid, RelaxationParams p, int stencil_order = 4)
      : grid_(grid), relax_(p), weights_(central_difference_weights(stencil_order)) {
    if (static_cast<int>(weights_.size()) >= grid_.n_k)
      throw Error(ErrorCode::GridTooCoarse, "grid too small for the stencil");
    const GaugeFunction<N> gauge = canonical_gauge(model);
    const BandMatrix<N> v = model.zone_boundary_unitary();
    const double g = model.reciprocal_period();
    for (int j = 0; j < grid_.n_k; ++j) {
      const double kappa = grid_.point(j);
      const EigenSystem<N> es = eigensystem<N>(model.hamiltonian_at(kappa), {.gauge_sensitive = true});
      BandMatrix<N> d = dipole_elements<N>(es, model.hamiltonian_derivative_at(kappa));
      const RealBandVector<N> conn = berry_connection<N>(model, kappa, gauge);
      for (int b = 0; b < es.dim(); ++b) d(b, b) = conn(b);
      energies_.push_back(es.energies);
      states_.push_back(es.states);
      dipoles_.push_back(d);
      wrap_up_.push_back(gauge(kappa + g).adjoint() * v * es.states);
      wrap_down_.push_back(gauge(kappa - g).adjoint() * v.adjoint() * es.states);
      RealBandVector<N> target(es.dim());
      for (int b = 0; b < es.dim(); ++b) target(b) = fermi_dirac(es.energies(b), p.mu(), p.kT());
      targets_.push_back(target);
    }
    rho_.resize(grid_.n_k);
    for (int j = 0; j < grid_.n_k; ++j) {
      const int n = static_cast<int>(energies_[j].size());
      rho_[j] = Matrix::Zero(n, n);
      rho_[j](0, 0) = 1.0;
    }
  }

  const KGrid& grid() const { return grid_; }
  double t() const { return t_; }
  const std::vector<Matrix>& rho() const { return rho_; }
  std::vector<Matrix>& rho() { return rho_; }
  const RealBandVector<N>& energies(int j) const { return energies_[j]; }
  const BandMatrix<N>& states(int j) const { return states_[j]; }
  const BandMatrix<N>& dipoles(int j) const { return dipoles_[j]; }

  /// Right-hand side for the whole grid at field strength `field`.
  std::vector<Matrix> rhs(const std::vector<Matrix>& rho, double field) const {
    const int n_k = grid_.n_k;
    const double inv_dk = 1.0 / grid_.spacing();
    const double g1 = relax_.rate1();
    const double g2 = relax_.rate2();
    const cplx i(0.0, 1.0);
    std::vector<Matrix> out(n_k);
    for (int j = 0; j < n_k; ++j) {
      const int n = static_cast<int>(rho[j].rows());
      Matrix grad = Matrix::Zero(n, n);
      for (std::size_t m = 0; m < weights_.size(); ++m) {
        const int step = static_cast<int>(m) + 1;
        grad += weights_[m] * (neighbour(rho, j + step) - neighbour(rho, j - step));
      }
      grad *= inv_dk;
      const BandMatrix<N>& d = dipoles_[j];
      Matrix r = field * grad + i * field * (rho[j] * d - d * rho[j]);
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          r(a, b) += -i * (energies_[j](a) - energies_[j](b)) * rho[j](a, b);
          if (a == b)
            r(a, a) -= g1 * (rho[j](a, a) - targets_[j](a));
          else
            r(a, b) -= g2 * rho[j](a, b);
        }
      }
      out[j] = r;
    }
    return out;
  }

  /// RK4 step of the whole grid. Throws GridTooCoarse when the field advects
  /// more than half a grid cell per step.
  void step(const Waveform& w, double dt) {
    const double e0 = w.E_at(t_);
    const double e_half = w.E_at(t_ + 0.5 * dt);
    const double e1 = w.E_at(t_ + dt);
    const double emax = std::max({std::abs(e0), std::abs(e_half), std::abs(e1)});
    const double courant = emax * dt / grid_.spacing();
    if (courant > 0.5)
      throw Error(ErrorCode::GridTooCoarse, "E dt / dk = " + std::to_string(courant) + " exceeds 0.5");

    const int n_k = grid_.n_k;
    auto axpy = [n_k](const std::vector<Matrix>& x, double a, const std::vector<Matrix>& y) {
      std::vector<Matrix> z(n_k);
      for (int j = 0; j < n_k; ++j) z[j] = x[j] + a * y[j];
      return z;
    };
    const auto k1 = rhs(rho_, e0);
    const auto k2 = rhs(axpy(rho_, 0.5 * dt, k1), e_half);
    const auto k3 = rhs(axpy(rho_, 0.5 * dt, k2), e_half);
    const auto k4 = rhs(axpy(rho_, dt, k3), e1);
    for (int j = 0; j < n_k; ++j) {
      const Matrix next = rho_[j] + (dt / 6.0) * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
      rho_[j] = hermitian_part<N>(next);
    }
    t_ += dt;
  }

 private:
  // rho at grid index i, which may lie one zone to either side.
  Matrix neighbour(const std::vector<Matrix>& rho, int i) const {
    const int n_k = grid_.n_k;
    if (i >= n_k) {
      const BandMatrix<N>& m = wrap_up_[i - n_k];
      return m * rho[i - n_k] * m.adjoint();
    }
    if (i < 0) {
      const BandMatrix<N>& m = wrap_down_[i + n_k];
      return m * rho[i + n_k] * m.adjoint();
    }
    return rho[i];
  }

  KGrid grid_;
  RelaxationParams relax_;
  std::vector<double> weights_;
  std::vector<RealBandVector<N>> energies_;
  std::vector<BandMatrix<N>> states_;
  std::vector<BandMatrix<N>> dipoles_;
  std::vector<BandMatrix<N>> wrap_up_;
  std::vector<BandMatrix<N>> wrap_down_;
  std::vector<RealBandVector<N>> targets_;
  std::vector<Matrix> rho_;
  double t_ = 0.0;
};

template <int N>
void sbe_step(SbeSystem<N>& system, const Waveform& w, double dt) {
  system.step(w, dt);
}

}  // namespace dlsim
