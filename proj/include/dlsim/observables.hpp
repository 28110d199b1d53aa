#pragma once

#include <cmath>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "dlsim/band_matrix.hpp"
#include "dlsim/bandmodel.hpp"
#include "dlsim/bases.hpp"
#include "dlsim/dynamics.hpp"
#include "dlsim/errors.hpp"
#include "dlsim/fields.hpp"

namespace dlsim {

/// Time-stamped named channels. Channel order is insertion order so the CSV
/// column layout is stable.
class ObservableSeries {
 public:
  void add_channel(const std::string& name) {
    if (index_.count(name)) throw Error(ErrorCode::InvalidArgument, "duplicate channel " + name);
    index_[name] = names_.size();
    names_.push_back(name);
    values_.emplace_back();
  }

  bool has_channel(const std::string& name) const { return index_.count(name) != 0; }

  /// Appends one row; `row` is ordered like channel_names().
  void append(double t_fs, std::span<const double> row) {
    if (row.size() != names_.size())
      throw Error(ErrorCode::LengthMismatch, "row has " + std::to_string(row.size()) + " values for " +
                                                 std::to_string(names_.size()) + " channels");
    if (!times_.empty() && !(t_fs > times_.back()))
      throw Error(ErrorCode::InvalidArgument, "times must be strictly increasing");
    times_.push_back(t_fs);
    for (std::size_t c = 0; c < row.size(); ++c) values_[c].push_back(row[c]);
  }

  std::size_t size() const { return times_.size(); }
  bool empty() const { return times_.empty(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<std::string>& channel_names() const { return names_; }

  const std::vector<double>& channel(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw Error(ErrorCode::InvalidArgument, "no channel " + name);
    return values_[it->second];
  }

  std::map<std::string, std::string> metadata;

 private:
  std::vector<double> times_;
  std::vector<std::string> names_;
  std::map<std::string, std::size_t> index_;
  std::vector<std::vector<double>> values_;
};

namespace detail {

// Bloch snapshots are time independent and match any state time.
template <int N>
void check_time(double state_t, const BasisSnapshot<N>& snap, double dt) {
  if (snap.kind != BasisKind::Bloch && std::abs(state_t - snap.t) > 0.5 * dt)
    throw Error(ErrorCode::MismatchedTime, "state at t=" + std::to_string(state_t) +
                                               " projected on snapshot at t=" + std::to_string(snap.t));
}

}  // namespace detail

/// |<u_b|psi>|^2 for a pure state at time state_t (atomic units).
template <int N>
double project_population(const StateVector<N>& psi, double state_t, const BasisSnapshot<N>& snap, int band,
                          double dt) {
  detail::check_time(state_t, snap, dt);
  return std::norm(snap.states.col(band).dot(psi));
}

/// <u_b|rho|u_b> for an orbital-basis density matrix at time state_t.
template <int N>
double project_population(const DensityMatrix<N>& rho, double state_t, const BasisSnapshot<N>& snap, int band,
                          double dt) {
  detail::check_time(state_t, snap, dt);
  const BandVector<N> u = snap.states.col(band);
  return std::real(u.dot(rho * u));
}

/// Population of band b of `snap` for a master state held in its frame.
template <int N>
double project_population(const MasterState<N>& s, const BasisSnapshot<N>& snap, int band, double dt) {
  detail::check_time(s.t(), snap, dt);
  return frame_population(s, snap, band);
}

/// Uniform-grid realization of (a_L / 2 pi) \int dk over the zone.
inline double bz_average(std::span<const double> values, const KGrid& grid) {
  if (static_cast<int>(values.size()) != grid.n_k)
    throw Error(ErrorCode::LengthMismatch, "bz_average: " + std::to_string(values.size()) +
                                               " values for " + std::to_string(grid.n_k) + " grid points");
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / grid.n_k;
}

/// Per-k current -Tr[dH(k + A(t)) rho] (electron charge -1).
template <int N>
double current(const DensityMatrix<N>& rho, const BandModel<N>& model, const Waveform& w, double k, double t) {
  const BandMatrix<N> dh = model.hamiltonian_derivative_at(shifted_wavevector(k, w, t));
  return -std::real((dh * rho).trace());
}

template <int N>
double current(const StateVector<N>& psi, const BandModel<N>& model, const Waveform& w, double k, double t) {
  const BandMatrix<N> dh = model.hamiltonian_derivative_at(shifted_wavevector(k, w, t));
  return -std::real(psi.dot(dh * psi));
}

/// Same current for a master state, evaluated without leaving the frame.
template <int N>
double current(const MasterState<N>& s, const BandModel<N>& model) {
  const BandMatrix<N>& u = s.frame.states;
  const BandMatrix<N> v = u.adjoint() * model.hamiltonian_derivative_at(s.frame.kappa) * u;
  return -std::real((v * s.rho).trace());
}

}  // namespace dlsim
