#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include "dlsim/band_matrix.hpp"
#include "dlsim/bandmodel.hpp"
#include "dlsim/errors.hpp"
#include "dlsim/fields.hpp"
#include "dlsim/spectral.hpp"

namespace dlsim {

enum class BasisKind { Bloch, Houston, PolarizedHouston };

inline constexpr std::array<BasisKind, 3> kAllBasisKinds = {BasisKind::Bloch, BasisKind::Houston,
                                                           BasisKind::PolarizedHouston};

inline std::string_view to_string(BasisKind kind) {
  switch (kind) {
    case BasisKind::Bloch: return "bloch";
    case BasisKind::Houston: return "houston";
    case BasisKind::PolarizedHouston: return "polarized";
  }
  return "bloch";
}

inline std::optional<BasisKind> parse_basis_kind(std::string_view s) {
  for (BasisKind k : kAllBasisKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

/// CSV channel suffix for populations: n_B, n_H, n_PH.
inline std::string_view channel_tag(BasisKind kind) {
  switch (kind) {
    case BasisKind::Bloch: return "B";
    case BasisKind::Houston: return "H";
    case BasisKind::PolarizedHouston: return "PH";
  }
  return "B";
}

/// Reference states at one crystal-momentum label k and time t.
///
/// `states` holds the geometrically transported vectors (u^A for Houston,
/// u^P = u^A c^P for the polarized basis); their columns already carry the
/// accumulated geometric phase, which is also recorded in `geo_phase`. The
/// dynamical phase is kept separately in `dyn_phase`; dressed() attaches it.
template <int N>
struct BasisSnapshot {
  BasisKind kind = BasisKind::Bloch;
  double k = 0.0;
  double t = 0.0;
  /// Shifted momentum k + A(t) at which the states were built (k for Bloch).
  double kappa = 0.0;
  BandMatrix<N> states;
  RealBandVector<N> energies;
  RealBandVector<N> dyn_phase;
  RealBandVector<N> geo_phase;

  // Polarized basis only: transported adiabatic states with their band
  // energies, and the transported eigenvectors of the effective Hamiltonian.
  BandMatrix<N> adiabatic;
  RealBandVector<N> adiabatic_energies;
  BandMatrix<N> coefficients;

  int dim() const { return static_cast<int>(states.cols()); }

  BandVector<N> dressed(int band) const { return states.col(band) * std::polar(1.0, dyn_phase(band)); }
};

template <int N>
struct EffectiveHamiltonian {
  BandMatrix<N> matrix;
};

/// Length-gauge Hamiltonian in the adiabatic basis: instantaneous energies on
/// the diagonal, field-dipole couplings E * d_ab (energy units) off it. The
/// dipoles are taken in the gauge of `adiabatic_states`.
template <int N>
EffectiveHamiltonian<N> effective_hamiltonian(const BandMatrix<N>& adiabatic_states,
                                              const RealBandVector<N>& energies,
                                              const BandMatrix<N>& hamiltonian_derivative, double field) {
  const EigenSystem<N> es{energies, adiabatic_states};
  const BandMatrix<N> d = dipole_elements<N>(es, hamiltonian_derivative);
  BandMatrix<N> h = field * d;
  for (int b = 0; b < es.dim(); ++b) h(b, b) = energies(b);
  return {hermitian_part<N>(h)};
}

template <int N>
EffectiveHamiltonian<N> effective_hamiltonian(const BasisSnapshot<N>& adiabatic_snapshot,
                                              const BandModel<N>& model, double field) {
  const bool polarized = adiabatic_snapshot.kind == BasisKind::PolarizedHouston;
  return effective_hamiltonian<N>(polarized ? adiabatic_snapshot.adiabatic : adiabatic_snapshot.states,
                                  polarized ? adiabatic_snapshot.adiabatic_energies : adiabatic_snapshot.energies,
                                  model.hamiltonian_derivative_at(adiabatic_snapshot.kappa), field);
}

namespace detail {

template <int N>
EigenSystem<N> instantaneous(const BandModel<N>& model, double kappa) {
  return eigensystem<N>(model.hamiltonian_at(kappa), {.gauge_sensitive = true});
}

// Eigenvalues of the effective Hamiltonian at shifted momentum kappa. They are
// gauge invariant, so the canonical gauge is good enough.
template <int N>
RealBandVector<N> polarized_energies(const BandModel<N>& model, double kappa, double field) {
  const EigenSystem<N> es = instantaneous(model, kappa);
  const EffectiveHamiltonian<N> heff =
      effective_hamiltonian<N>(es.states, es.energies, model.hamiltonian_derivative_at(kappa), field);
  return eigenvalues<N>(heff.matrix);
}

}  // namespace detail

template <int N>
BasisSnapshot<N> bloch_snapshot(const BandModel<N>& model, double k, double t = 0.0) {
  const EigenSystem<N> es = detail::instantaneous(model, k);
  const int n = es.dim();
  BasisSnapshot<N> s;
  s.kind = BasisKind::Bloch;
  s.k = k;
  s.t = t;
  s.kappa = k;
  s.states = es.states;
  s.energies = es.energies;
  s.dyn_phase = RealBandVector<N>::Zero(n);
  s.geo_phase = RealBandVector<N>::Zero(n);
  return s;
}

/// Houston snapshot at the start of a run; the canonical gauge is fixed here
/// and only transported afterwards.
template <int N>
BasisSnapshot<N> houston_initial(const BandModel<N>& model, const Waveform& w, double k, double t0) {
  BasisSnapshot<N> s = bloch_snapshot(model, shifted_wavevector(k, w, t0), t0);
  s.kind = BasisKind::Houston;
  s.k = k;
  return s;
}

template <int N>
BasisSnapshot<N> houston_step(const BasisSnapshot<N>& snap, const BandModel<N>& model, const Waveform& w,
                              double dt) {
  if (snap.kind != BasisKind::Houston)
    throw Error(ErrorCode::InvalidArgument, "houston_step needs a Houston snapshot");
  const double t_next = snap.t + dt;
  const double kappa = shifted_wavevector(snap.k, w, t_next);
  const EigenSystem<N> es = detail::instantaneous(model, kappa);
  const TransportResult<N> tr = parallel_transport<N>(snap.states, es.states);
  const RealBandVector<N> mid =
      eigenvalues<N>(model.hamiltonian_at(shifted_wavevector(snap.k, w, snap.t + 0.5 * dt)));

  BasisSnapshot<N> out = snap;
  out.t = t_next;
  out.kappa = kappa;
  out.states = tr.states;
  out.energies = es.energies;
  out.dyn_phase = snap.dyn_phase - mid * dt;
  out.geo_phase = snap.geo_phase + tr.applied_phase;
  return out;
}

template <int N>
BasisSnapshot<N> polarized_initial(const BandModel<N>& model, const Waveform& w, double k, double t0) {
  const double kappa = shifted_wavevector(k, w, t0);
  const EigenSystem<N> es = detail::instantaneous(model, kappa);
  const EffectiveHamiltonian<N> heff =
      effective_hamiltonian<N>(es.states, es.energies, model.hamiltonian_derivative_at(kappa), w.E_at(t0));
  const EigenSystem<N> pol = eigensystem<N>(heff.matrix, {.gauge_sensitive = true});
  const int n = es.dim();

  BasisSnapshot<N> s;
  s.kind = BasisKind::PolarizedHouston;
  s.k = k;
  s.t = t0;
  s.kappa = kappa;
  s.adiabatic = es.states;
  s.adiabatic_energies = es.energies;
  s.coefficients = pol.states;
  s.states = es.states * pol.states;
  s.energies = pol.energies;
  s.dyn_phase = RealBandVector<N>::Zero(n);
  s.geo_phase = RealBandVector<N>::Zero(n);
  return s;
}

/// One step of the polarized Houston basis: transport the adiabatic states,
/// rediagonalize the effective Hamiltonian in that gauge, and transport its
/// eigenvectors against the previous ones (this accumulates gamma^P).
template <int N>
BasisSnapshot<N> polarized_step(const BasisSnapshot<N>& snap, const BandModel<N>& model, const Waveform& w,
                                double dt) {
  if (snap.kind != BasisKind::PolarizedHouston)
    throw Error(ErrorCode::InvalidArgument, "polarized_step needs a PolarizedHouston snapshot");
  const double t_next = snap.t + dt;
  const double kappa = shifted_wavevector(snap.k, w, t_next);
  const EigenSystem<N> es = detail::instantaneous(model, kappa);
  const TransportResult<N> adiabatic = parallel_transport<N>(snap.adiabatic, es.states);

  const EffectiveHamiltonian<N> heff = effective_hamiltonian<N>(
      adiabatic.states, es.energies, model.hamiltonian_derivative_at(kappa), w.E_at(t_next));
  const EigenSystem<N> pol = eigensystem<N>(heff.matrix, {.gauge_sensitive = true});
  const TransportResult<N> coeff = parallel_transport<N>(snap.coefficients, pol.states);

  const double t_mid = snap.t + 0.5 * dt;
  const RealBandVector<N> mid =
      detail::polarized_energies(model, shifted_wavevector(snap.k, w, t_mid), w.E_at(t_mid));

  BasisSnapshot<N> out = snap;
  out.t = t_next;
  out.kappa = kappa;
  out.adiabatic = adiabatic.states;
  out.adiabatic_energies = es.energies;
  out.coefficients = coeff.states;
  out.states = adiabatic.states * coeff.states;
  out.energies = pol.energies;
  out.dyn_phase = snap.dyn_phase - mid * dt;
  out.geo_phase = snap.geo_phase + coeff.applied_phase;
  return out;
}

template <int N>
BasisSnapshot<N> initial_snapshot(BasisKind kind, const BandModel<N>& model, const Waveform& w, double k,
                                  double t0) {
  switch (kind) {
    case BasisKind::Bloch: return bloch_snapshot(model, k, t0);
    case BasisKind::Houston: return houston_initial(model, w, k, t0);
    case BasisKind::PolarizedHouston: return polarized_initial(model, w, k, t0);
  }
  return bloch_snapshot(model, k, t0);
}

/// Advances any snapshot by dt. Bloch states are time independent; only
/// their clock and dynamical phase move.
template <int N>
BasisSnapshot<N> advance(const BasisSnapshot<N>& snap, const BandModel<N>& model, const Waveform& w, double dt) {
  switch (snap.kind) {
    case BasisKind::Bloch: {
      BasisSnapshot<N> out = snap;
      out.t += dt;
      out.dyn_phase = snap.dyn_phase - snap.energies * dt;
      return out;
    }
    case BasisKind::Houston: return houston_step(snap, model, w, dt);
    case BasisKind::PolarizedHouston: return polarized_step(snap, model, w, dt);
  }
  return snap;
}

}  // namespace dlsim
