#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "dlsim/dlsim.hpp"

using namespace dlsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

// Constant vector potential sweep A(t) = -v t for t in [0, T], flat outside.
class LinearSweep final : public Waveform {
 public:
  LinearSweep(double v, double t_end) : v_(v), t_end_(t_end) {}
  double A_at(double t) const override { return -v_ * std::clamp(t, 0.0, t_end_); }
  double E_at(double t) const override { return (t >= 0.0 && t <= t_end_) ? v_ : 0.0; }
  std::pair<double, double> support() const override { return {0.0, t_end_}; }

 private:
  double v_, t_end_;
};

template <int N>
double orthonormality_error(const BasisSnapshot<N>& s) {
  const int n = s.dim();
  return max_abs<N>(BandMatrix<N>(s.states.adjoint() * s.states) - BandMatrix<N>::Identity(n, n));
}

}  // namespace

TEST_CASE("Bloch snapshot", "[bases]") {
  const DimerChain model;
  const double edge = std::numbers::pi / model.lattice_constant();
  const BasisSnapshot<2> s = bloch_snapshot(model, edge);
  CHECK(s.kind == BasisKind::Bloch);
  CHECK(max_abs<2>(s.states - BandMatrix<2>::Identity()) < 1e-15);
  CHECK(s.energies(0) < s.energies(1));
  CHECK(s.dyn_phase.cwiseAbs().maxCoeff() == 0.0);

  const BasisSnapshot<2> later = bloch_snapshot(model, edge, 123.0);
  CHECK(max_abs<2>(later.states - s.states) == 0.0);
  CHECK((later.energies - s.energies).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("basis kind strings", "[bases]") {
  for (BasisKind k : kAllBasisKinds) CHECK(parse_basis_kind(to_string(k)) == k);
  CHECK(to_string(BasisKind::Bloch) == "bloch");
  CHECK(to_string(BasisKind::Houston) == "houston");
  CHECK(to_string(BasisKind::PolarizedHouston) == "polarized");
  CHECK_FALSE(parse_basis_kind("floquet").has_value());
}

TEST_CASE("Houston step without field", "[bases]") {
  const DimerChain model;
  const NoField none;
  const double k = 0.17;
  BasisSnapshot<2> s = houston_initial(model, none, k, 0.0);
  const BasisSnapshot<2> start = s;
  const double dt = 0.1;
  for (int i = 0; i < 50; ++i) s = houston_step(s, model, none, dt);
  CHECK(max_abs<2>(s.states - start.states) == 0.0);
  CHECK_THAT(s.dyn_phase(0), WithinRel(-start.energies(0) * 50 * dt, 1e-13));
  CHECK_THAT(s.dyn_phase(1), WithinRel(-start.energies(1) * 50 * dt, 1e-13));
  CHECK(s.geo_phase.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Houston states close on the embedded start after a full zone sweep", "[bases]") {
  const DimerChain model;
  const double g = model.reciprocal_period();
  const double t_sweep = 2000.0;
  const LinearSweep sweep(g / t_sweep, t_sweep);
  BasisSnapshot<2> s = houston_initial(model, sweep, 0.3, 0.0);
  const BasisSnapshot<2> start = s;
  const int n = 4000;
  for (int i = 0; i < n; ++i) s = houston_step(s, model, sweep, t_sweep / n);
  CHECK_THAT(s.kappa, WithinAbs(start.kappa - g, 1e-12));
  // kappa - G carries V^dagger start; for the dimer V = diag(1, -1). Each
  // transported column picks up its Wilson-loop phase on top.
  BandMatrix<2> expected = model.zone_boundary_unitary().adjoint() * start.states;
  for (int b = 0; b < 2; ++b) expected.col(b) *= std::polar(1.0, -zak_phase<2>(model, b));
  CHECK(std::abs(std::remainder(zak_phase<2>(model, 1), 2 * std::numbers::pi)) > 3.0);
  CHECK(max_abs<2>(s.states - expected) < 1e-10);
  CHECK(std::abs(std::remainder(s.geo_phase(0), 2 * std::numbers::pi)) < 1e-10);
  CHECK(orthonormality_error(s) < 1e-10);
}

TEST_CASE("Houston energies under a static ramp follow the shifted momentum", "[bases]") {
  const DimerChain model;
  const StaticRamp ramp(StaticRampParams{1e9, 5.0});  // strong field so the shift is visible
  const double k = 0.1;
  const double dt = 0.2;
  BasisSnapshot<2> s = houston_initial(model, ramp, k, 0.0);
  const int steps = static_cast<int>(3.0 * ramp.ramp_end() / dt);
  for (int i = 0; i < steps; ++i) s = houston_step(s, model, ramp, dt);
  const double e = units::V_per_m_to_au(1e9);
  const double kappa = k - e * (s.t - 0.5 * ramp.ramp_end());
  const RealBandVector<2> oracle = eigenvalues<2>(dimer_hamiltonian(model.params(), kappa));
  CHECK((s.energies - oracle).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("effective Hamiltonian", "[bases]") {
  const DimerChain model;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.01, 0.01);
  for (int trial = 0; trial < 50; ++trial) {
    const double kappa = 2.0 * u(rng) * 100.0;
    const BasisSnapshot<2> s = bloch_snapshot(model, kappa);
    const EffectiveHamiltonian<2> h0 = effective_hamiltonian(s, model, 0.0);
    CHECK(max_abs<2>(BandMatrix<2>(h0.matrix - BandMatrix<2>(s.energies.cast<cplx>().asDiagonal()))) == 0.0);

    const double field = u(rng);
    const EffectiveHamiltonian<2> h = effective_hamiltonian(s, model, field);
    CHECK(hermiticity_error<2>(h.matrix) <= 1e-12);
    const double d = std::abs(dipole_elements<2>(model, kappa)(1, 0));
    const double gap = s.energies(1) - s.energies(0);
    const RealBandVector<2> ep = eigenvalues<2>(h.matrix);
    CHECK_THAT(ep(1) - ep(0), WithinRel(std::sqrt(gap * gap + 4.0 * field * field * d * d), 1e-12));
  }
}

TEST_CASE("polarized basis without field equals Houston", "[bases]") {
  const DimerChain model;
  const NoField none;
  BasisSnapshot<2> h = houston_initial(model, none, 0.4, 0.0);
  BasisSnapshot<2> p = polarized_initial(model, none, 0.4, 0.0);
  for (int i = 0; i < 100; ++i) {
    h = houston_step(h, model, none, 0.1);
    p = polarized_step(p, model, none, 0.1);
  }
  CHECK(max_abs<2>(h.states - p.states) < 1e-14);
  CHECK((h.energies - p.energies).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("polarized basis under a static ramp", "[bases]") {
  const DimerChain model;
  const StaticRamp ramp(StaticRampParams{1e8, 5.0});
  const double k = 0.25;
  BasisSnapshot<2> p = polarized_initial(model, ramp, k, 0.0);
  const double dt = 0.2;
  for (int i = 0; i < 2000; ++i) {
    p = polarized_step(p, model, ramp, dt);
    CHECK(orthonormality_error(p) < 1e-10);
    // Real Hamiltonian, real gauge: the polarized geometric phase stays 0 mod pi.
    const double g = std::abs(std::remainder(p.geo_phase(0), std::numbers::pi));
    CHECK(g < 1e-12);
  }
  // Stark-split energies equal the closed-form effective-Hamiltonian value.
  const double field = ramp.E_at(p.t);
  const RealBandVector<2> e = eigenvalues<2>(model.hamiltonian_at(p.kappa));
  const double d = std::abs(dipole_elements<2>(model, p.kappa)(1, 0));
  const double gap = e(1) - e(0);
  CHECK_THAT(p.energies(1) - p.energies(0), WithinRel(std::sqrt(gap * gap + 4.0 * field * field * d * d), 1e-12));
}

TEST_CASE("weak-field scaling of the polarized states", "[bases][property]") {
  const DimerChain model;
  const double kappa = 0.7;
  const BasisSnapshot<2> a = bloch_snapshot(model, kappa);
  const double e0 = 1e-5;
  double prev_dv = 0.0, prev_de = 0.0;
  for (int i = 0; i < 4; ++i) {
    const double field = e0 / std::pow(2.0, i);
    const EffectiveHamiltonian<2> h = effective_hamiltonian(a, model, field);
    const EigenSystem<2> pol = eigensystem<2>(h.matrix);
    const BandMatrix<2> up = a.states * pol.states;
    const BandMatrix<2> aligned = parallel_transport<2>(a.states, up).states;
    const double dv = (aligned - a.states).norm();
    const double de = std::abs(pol.energies(0) - a.energies(0));
    if (i > 0) {
      CHECK_THAT(prev_dv / dv, WithinRel(2.0, 1e-3));
      CHECK_THAT(prev_de / de, WithinRel(4.0, 1e-3));
    }
    prev_dv = dv;
    prev_de = de;
  }
}

TEST_CASE("advance dispatches by kind", "[bases]") {
  const DimerChain model;
  const NoField none;
  for (BasisKind kind : kAllBasisKinds) {
    BasisSnapshot<2> s = initial_snapshot(kind, model, none, 0.5, 0.0);
    CHECK(s.kind == kind);
    s = advance(s, model, none, 0.3);
    CHECK_THAT(s.t, WithinAbs(0.3, 1e-15));
    CHECK_THAT(s.dyn_phase(0), WithinRel(-0.3 * s.energies(0), 1e-13));
  }
  CHECK_THROWS_AS(houston_step(bloch_snapshot(model, 0.1), model, none, 0.1), Error);
  CHECK_THROWS_AS(polarized_step(bloch_snapshot(model, 0.1), model, none, 0.1), Error);
}
