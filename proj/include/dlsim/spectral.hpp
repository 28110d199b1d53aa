#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "dlsim/band_matrix.hpp"
#include "dlsim/bandmodel.hpp"
#include "dlsim/errors.hpp"

namespace dlsim {

/// Eigen-decomposition of a Hermitian band matrix. Energies ascend; states
/// are the matching orthonormal columns.
template <int N>
struct EigenSystem {
  RealBandVector<N> energies;
  BandMatrix<N> states;

  int dim() const { return static_cast<int>(energies.size()); }
};

struct EigenOptions {
  /// Callers that differentiate or transport the states set this so a
  /// (near-)degenerate spectrum is reported instead of silently mixed.
  bool gauge_sensitive = false;
  double degeneracy_tol = 1e-10;
  double hermiticity_tol = 1e-12;
};

namespace detail {

// Multiply each column by the unit phase that makes its largest-magnitude
// component real and positive. The first maximal component wins ties.
template <int N>
void fix_canonical_phase(BandMatrix<N>& v) {
  for (int c = 0; c < v.cols(); ++c) {
    int best = 0;
    double best_mag = -1.0;
    for (int r = 0; r < v.rows(); ++r) {
      const double mag = std::abs(v(r, c));
      if (mag > best_mag * (1.0 + 1e-14)) {
        best = r;
        best_mag = mag;
      }
    }
    if (best_mag > 0.0) v.col(c) *= std::conj(v(best, c)) / best_mag;
  }
}

// Closed-form eigenpairs of [[a, b], [conj(b), d]]. The eigenvector for each
// eigenvalue is built from whichever matrix row gives the better-conditioned
// null vector.
template <int N>
EigenSystem<N> eigensystem_2x2(cplx h00, cplx h01, cplx h10, cplx h11) {
  const double a = h00.real();
  const double d = h11.real();
  const cplx b = 0.5 * (h01 + std::conj(h10));
  const double mean = 0.5 * (a + d);
  const double half = 0.5 * (a - d);
  const double r = std::hypot(half, std::abs(b));

  EigenSystem<N> es;
  es.energies.resize(2);
  es.states.resize(2, 2);
  es.energies << mean - r, mean + r;

  if (r == 0.0) {
    es.states.setIdentity();
    return es;
  }
  cplx l0, l1, u0, u1;
  if (half >= 0.0) {
    l0 = b;
    l1 = -(half + r);
    u0 = -(half + r);
    u1 = -std::conj(b);
  } else {
    l0 = r - half;
    l1 = -std::conj(b);
    u0 = b;
    u1 = r - half;
  }
  const double ln = std::sqrt(std::norm(l0) + std::norm(l1));
  const double un = std::sqrt(std::norm(u0) + std::norm(u1));
  es.states(0, 0) = l0 / ln;
  es.states(1, 0) = l1 / ln;
  es.states(0, 1) = u0 / un;
  es.states(1, 1) = u1 / un;
  return es;
}

// Cyclic Jacobi: annihilate each off-diagonal pair with the exact 2x2
// diagonalizer until the off-diagonal Frobenius norm is at round-off.
template <int N>
EigenSystem<N> eigensystem_jacobi(const BandMatrix<N>& h) {
  const int n = static_cast<int>(h.rows());
  BandMatrix<N> a = hermitian_part<N>(h);
  BandMatrix<N> v = BandMatrix<N>::Identity(n, n);
  const double scale = std::max(a.norm(), 1e-300);

  for (int sweep = 0; sweep < 64; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off += std::norm(a(p, q));
    if (std::sqrt(off) <= 1e-16 * scale) break;

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) <= 1e-300) continue;
        const EigenSystem<2> sub = eigensystem_2x2<2>(a(p, p), a(p, q), a(q, p), a(q, q));
        BandMatrix<N> g = BandMatrix<N>::Identity(n, n);
        g(p, p) = sub.states(0, 0);
        g(p, q) = sub.states(0, 1);
        g(q, p) = sub.states(1, 0);
        g(q, q) = sub.states(1, 1);
        a = g.adjoint() * a * g;
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        v = v * g;
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) { return a(x, x).real() < a(y, y).real(); });
  EigenSystem<N> es;
  es.energies.resize(n);
  es.states.resize(n, n);
  for (int i = 0; i < n; ++i) {
    es.energies(i) = a(order[i], order[i]).real();
    es.states.col(i) = v.col(order[i]);
  }
  return es;
}

}  // namespace detail

template <int N>
EigenSystem<N> eigensystem(const BandMatrix<N>& h, const EigenOptions& opt = {}) {
  if (h.rows() != h.cols() || h.rows() < 1)
    throw Error(ErrorCode::InvalidArgument, "eigensystem expects a non-empty square matrix");
  const double herm = hermiticity_error<N>(h);
  if (herm > opt.hermiticity_tol * std::max(1.0, max_abs<N>(h)))
    throw Error(ErrorCode::NonHermitianInput, "max|H - H^dagger| = " + std::to_string(herm));

  EigenSystem<N> es;
  if (h.rows() == 1) {
    es.energies = RealBandVector<N>::Constant(1, h(0, 0).real());
    es.states = BandMatrix<N>::Identity(1, 1);
  } else if (h.rows() == 2) {
    es = detail::eigensystem_2x2<N>(h(0, 0), h(0, 1), h(1, 0), h(1, 1));
  } else {
    es = detail::eigensystem_jacobi<N>(h);
  }
  detail::fix_canonical_phase<N>(es.states);

  if (opt.gauge_sensitive) {
    for (int b = 0; b + 1 < es.dim(); ++b) {
      const double gap = es.energies(b + 1) - es.energies(b);
      if (gap < opt.degeneracy_tol)
        throw Error(ErrorCode::DegenerateSpectrum,
                    "band gap " + std::to_string(gap) + " Ha below degeneracy tolerance");
    }
  }
  return es;
}

/// Ascending eigenvalues only; closed form for two bands.
template <int N>
RealBandVector<N> eigenvalues(const BandMatrix<N>& h) {
  if (h.rows() == 2) {
    const double mean = 0.5 * (h(0, 0).real() + h(1, 1).real());
    const double half = 0.5 * (h(0, 0).real() - h(1, 1).real());
    const double r = std::hypot(half, std::abs(0.5 * (h(0, 1) + std::conj(h(1, 0)))));
    RealBandVector<N> e(2);
    e << mean - r, mean + r;
    return e;
  }
  return eigensystem<N>(h).energies;
}

template <int N>
struct TransportResult {
  BandMatrix<N> states;
  /// Phase multiplied onto each incoming column, in (-pi, pi].
  RealBandVector<N> applied_phase;
};

/// Aligns next_states to prev_states so each <prev_b|next_b> is real and
/// positive. The band order must already correspond: the largest overlap of
/// prev_b has to be with next_b and exceed 0.5 in magnitude.
template <int N>
TransportResult<N> parallel_transport(const BandMatrix<N>& prev_states, const BandMatrix<N>& next_states) {
  const int n = static_cast<int>(prev_states.cols());
  if (next_states.cols() != n || next_states.rows() != prev_states.rows())
    throw Error(ErrorCode::InvalidArgument, "parallel_transport: shape mismatch");

  const BandMatrix<N> overlap = prev_states.adjoint() * next_states;
  TransportResult<N> out{next_states, RealBandVector<N>::Zero(n)};
  for (int b = 0; b < n; ++b) {
    int best = 0;
    for (int j = 1; j < n; ++j)
      if (std::abs(overlap(b, j)) > std::abs(overlap(b, best))) best = j;
    const double mag = std::abs(overlap(b, best));
    if (best != b || mag <= 0.5)
      throw Error(ErrorCode::BandMatchingFailure, "band " + std::to_string(b) + " best overlap " +
                                                      std::to_string(mag) + " with band " + std::to_string(best));
    const double phase = -std::arg(overlap(b, b));
    out.applied_phase(b) = phase;
    out.states.col(b) *= std::polar(1.0, phase);
  }
  return out;
}

/// d_ab = i <u_a|dH/dk|u_b> / (eps_b - eps_a) for a != b, zero diagonal.
/// Equal to i<u_a|d_k u_b> in the gauge of `es`.
template <int N>
BandMatrix<N> dipole_elements(const EigenSystem<N>& es, const BandMatrix<N>& dh, double degeneracy_tol = 1e-10) {
  const int n = es.dim();
  const BandMatrix<N> velocity = es.states.adjoint() * dh * es.states;
  BandMatrix<N> d = BandMatrix<N>::Zero(n, n);
  for (int a = 0; a < n; ++a) {
    for (int b = 0; b < n; ++b) {
      if (a == b) continue;
      const double gap = es.energies(b) - es.energies(a);
      if (std::abs(gap) < degeneracy_tol)
        throw Error(ErrorCode::DegenerateSpectrum, "dipole_elements: degenerate bands");
      d(a, b) = cplx(0.0, 1.0) * velocity(a, b) / gap;
    }
  }
  return d;
}

template <int N>
BandMatrix<N> dipole_elements(const BandModel<N>& model, double kappa) {
  const EigenSystem<N> es = eigensystem<N>(model.hamiltonian_at(kappa), {.gauge_sensitive = true});
  return dipole_elements<N>(es, model.hamiltonian_derivative_at(kappa));
}

/// Maps kappa to band-space states in some caller-chosen gauge.
template <int N>
using GaugeFunction = std::function<BandMatrix<N>(double)>;

template <int N>
GaugeFunction<N> canonical_gauge(const BandModel<N>& model) {
  return [&model](double kappa) {
    return eigensystem<N>(model.hamiltonian_at(kappa), {.gauge_sensitive = true}).states;
  };
}

/// A^BC_b(kappa) = i<u_b|d_k u_b> by central differences of the supplied gauge.
template <int N>
RealBandVector<N> berry_connection(const BandModel<N>& model, double kappa, const GaugeFunction<N>& gauge,
                                   double step = 0.0) {
  const double h = step > 0.0 ? step : 1e-5 / model.lattice_constant();
  const BandMatrix<N> u = gauge(kappa);
  const BandMatrix<N> du = (gauge(kappa + h) - gauge(kappa - h)) / (2.0 * h);
  const int n = static_cast<int>(u.cols());
  RealBandVector<N> conn(n);
  for (int b = 0; b < n; ++b) conn(b) = (cplx(0.0, 1.0) * u.col(b).dot(du.col(b))).real();
  return conn;
}

/// Gauge-invariant Berry phase of one band around the Brillouin zone from the
/// discrete Wilson loop -Im log prod <u(k_j)|u(k_{j+1})>. Result in (-pi, pi].
template <int N>
double zak_phase(const BandModel<N>& model, int band, int n_k = 256) {
  const double dk = model.reciprocal_period() / n_k;
  auto state = [&](double kappa) -> BandVector<N> {
    return eigensystem<N>(model.hamiltonian_at(kappa), {.gauge_sensitive = true}).states.col(band);
  };
  const BandVector<N> first = state(0.0);
  // The loop closes on the embedded image of the first state at kappa = G.
  const BandVector<N> closing = model.zone_boundary_unitary() * first;
  cplx product = 1.0;
  BandVector<N> prev = first;
  for (int j = 1; j <= n_k; ++j) {
    const BandVector<N> next = j == n_k ? closing : state(j * dk);
    product *= prev.dot(next);
    prev = next;
  }
  return -std::arg(product);
}

}  // namespace dlsim
