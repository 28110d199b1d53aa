#pragma once

#include <Eigen/Dense>
#include <complex>

namespace dlsim {

using cplx = std::complex<double>;

/// Band-space dimension parameter for run-time sized models.
inline constexpr int kDynamic = Eigen::Dynamic;

/// Upper bound on the band-space dimension of run-time sized matrices. They
/// carry inline storage of this size so the per-k hot loops never touch the
/// heap.
inline constexpr int kMaxBands = 4;

namespace detail {
constexpr int max_dim(int n) { return n == Eigen::Dynamic ? kMaxBands : n; }
}  // namespace detail

/// N x N complex matrix; N is a compile-time band count or kDynamic.
template <int N>
using BandMatrix = Eigen::Matrix<cplx, N, N, Eigen::ColMajor, detail::max_dim(N), detail::max_dim(N)>;
template <int N>
using BandVector = Eigen::Matrix<cplx, N, 1, Eigen::ColMajor, detail::max_dim(N), 1>;
template <int N>
using RealBandVector = Eigen::Matrix<double, N, 1, Eigen::ColMajor, detail::max_dim(N), 1>;

/// max |M - M^dagger| over all entries.
template <int N>
double hermiticity_error(const BandMatrix<N>& m) {
  return (m - m.adjoint()).cwiseAbs().maxCoeff();
}

template <int N>
BandMatrix<N> hermitian_part(const BandMatrix<N>& m) {
  return 0.5 * (m + m.adjoint());
}

/// Largest absolute entry; used as the scale in relative residual checks.
template <int N>
double max_abs(const BandMatrix<N>& m) {
  return m.cwiseAbs().maxCoeff();
}

}  // namespace dlsim
