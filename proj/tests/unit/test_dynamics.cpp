#include <catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "dlsim/dlsim.hpp"
#include "dlsim/validation.hpp"

using namespace dlsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const cplx kI(0.0, 1.0);

// Classical RK4 on i dpsi/dt = H(k + A(t)) psi.
StateVector<2> rk4_reference(StateVector<2> psi, double k, double t0, double t1, int steps, const DimerChain& model,
                             const Waveform& w) {
  const double dt = (t1 - t0) / steps;
  auto f = [&](double t, const StateVector<2>& y) -> StateVector<2> {
    return -kI * (model.hamiltonian_at(shifted_wavevector(k, w, t)) * y);
  };
  double t = t0;
  for (int i = 0; i < steps; ++i) {
    const StateVector<2> k1 = f(t, psi);
    const StateVector<2> k2 = f(t + 0.5 * dt, psi + 0.5 * dt * k1);
    const StateVector<2> k3 = f(t + 0.5 * dt, psi + 0.5 * dt * k2);
    const StateVector<2> k4 = f(t + dt, psi + dt * k3);
    psi += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += dt;
  }
  return psi;
}

MasterState<2> excited_master(BasisKind kind, const DimerChain& model, const Waveform& w, double k) {
  MasterState<2> s = master_initial(kind, model, w, k, 0.0);
  s.rho = DensityMatrix<2>::Zero();
  s.rho(1, 1) = 1.0;
  return s;
}

}  // namespace

TEST_CASE("TDSE: stationary valence state without field", "[dynamics]") {
  const DimerChain model;
  const NoField none;
  const double k = 0.21;
  const StateVector<2> v = valence_state(model, k);
  const double ev = eigenvalues<2>(model.hamiltonian_at(k))(0);
  StateVector<2> psi = v;
  const double dt = 0.1;
  for (int i = 0; i < 1000; ++i) psi = tdse_step(psi, k, i * dt, dt, model, none);
  const StateVector<2> expected = std::polar(1.0, -ev * 1000 * dt) * v;
  CHECK((psi - expected).norm() < 1e-11);
  const BasisSnapshot<2> b = bloch_snapshot(model, k, 1000 * dt);
  CHECK_THAT(project_population(psi, 1000 * dt, b, 0, dt), WithinAbs(1.0, 1e-13));
  CHECK(project_population(psi, 1000 * dt, b, 1, dt) < 1e-26);
}

TEST_CASE("TDSE: norm over 1e5 random steps", "[dynamics][property][precision-floor]") {
  const DimerChain model;
  const Pulse pulse(PulseParams{4.0, 0.1, 100.0});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> kd(0.0, model.reciprocal_period());
  std::uniform_real_distribution<double> td(0.0, units::fs_to_au(100.0));
  std::uniform_real_distribution<double> dd(0.01, 1.0);
  StateVector<2> psi = valence_state(model, 0.3);
  double worst_step = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double before = psi.norm();
    psi = tdse_step(psi, kd(rng), td(rng), dd(rng), model, pulse);
    worst_step = std::max(worst_step, std::abs(psi.norm() - before));
  }
  CHECK(worst_step < 1e-13);
  INFO("final norm deviation " << std::abs(psi.norm() - 1.0));
  CHECK(std::abs(psi.norm() - 1.0) < 1e-14);
}

// The exponential-midpoint and RK4 states differ by a global phase, so the
// comparison is on rho = psi psi^+.
TEST_CASE("TDSE agrees with fine-step RK4 over the weak off-resonant pulse", "[dynamics]") {
  const DimerChain model;
  const PulseParams pp{1.0, 0.1, 100.0};
  const Pulse pulse(pp);
  const double t1 = units::fs_to_au(pp.T_pulse_fs);
  const double dt = 0.1;
  const int steps = static_cast<int>(std::round(t1 / dt));
  for (double k : {0.0, 0.11, 0.3}) {
    StateVector<2> psi = valence_state(model, k);
    const StateVector<2> start = psi;
    for (int i = 0; i < steps; ++i) psi = tdse_step(psi, k, i * dt, dt, model, pulse);
    const StateVector<2> ref = rk4_reference(start, k, 0.0, steps * dt, 100 * steps, model, pulse);
    CHECK(max_abs<2>(DensityMatrix<2>(psi * psi.adjoint() - ref * ref.adjoint())) < 1e-8);
  }
}

TEST_CASE("TDSE tracks fine-step RK4 throughout the pulse with second-order error", "[dynamics]") {
  const DimerChain model;
  const Pulse pulse(PulseParams{1.0, 0.1, 100.0});
  const double k = 0.27;
  const double t1 = units::fs_to_au(100.0);
  auto worst = [&](double dt) {
    const int steps = static_cast<int>(std::round(t1 / dt));
    StateVector<2> psi = valence_state(model, k);
    StateVector<2> ref = psi;
    double err = 0.0;
    for (int i = 0; i < steps; ++i) {
      ref = rk4_reference(ref, k, i * dt, (i + 1) * dt, 100, model, pulse);
      psi = tdse_step(psi, k, i * dt, dt, model, pulse);
      err = std::max(err, max_abs<2>(DensityMatrix<2>(psi * psi.adjoint() - ref * ref.adjoint())));
    }
    return err;
  };
  const double e1 = worst(0.05);
  const double e2 = worst(0.025);
  CHECK(e2 < 1e-8);
  CHECK_THAT(e1 / e2, WithinRel(4.0, 0.1));
}

TEST_CASE("unitary propagator", "[dynamics]") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  for (int trial = 0; trial < 100; ++trial) {
    BandMatrix<2> h;
    h << g(rng), cplx(g(rng), g(rng)), 0.0, g(rng);
    h(1, 0) = std::conj(h(0, 1));
    const BandMatrix<2> u = unitary_propagator<2>(h, 0.37);
    CHECK(max_abs<2>(BandMatrix<2>(u.adjoint() * u) - BandMatrix<2>::Identity()) < 1e-14);
    const EigenSystem<2> es = eigensystem<2>(h);
    for (int b = 0; b < 2; ++b)
      CHECK((u * es.states.col(b) - std::polar(1.0, -0.37 * es.energies(b)) * es.states.col(b)).norm() < 1e-13);
  }
}

TEST_CASE("Fermi-Dirac occupation", "[dynamics]") {
  CHECK(fermi_dirac(0.3, 0.3, 0.01) == 0.5);
  CHECK(fermi_dirac(0.0, 0.0, 0.0) == 0.5);
  const DimerChain model;
  const RealBandVector<2> e = eigenvalues<2>(model.hamiltonian_at(0.4));
  CHECK(fermi_dirac(e(0), 0.0, 0.0) == 1.0);
  CHECK(fermi_dirac(e(1), 0.0, 0.0) == 0.0);
  double prev = 1.0;
  for (int i = -200; i <= 200; ++i) {
    const double f = fermi_dirac(0.01 * i, 0.1, 0.05);
    CHECK(f <= prev);
    CHECK(f >= 0.0);
    prev = f;
  }
  CHECK(fermi_dirac(1e3, 0.0, 1e-3) == 0.0);
  CHECK(fermi_dirac(-1e3, 0.0, 1e-3) == 1.0);
}

TEST_CASE("relaxation parameters", "[dynamics]") {
  const RelaxationParams p;
  CHECK(p.T1_fs == 20.0);
  CHECK(p.T2_fs == 20.0);
  CHECK(p.mu_eV == 0.0);
  CHECK(p.Te_K == 0.0);
  CHECK_THROWS_AS((RelaxationParams{0.0, 20.0, 0.0, 0.0}.validate()), Error);
  CHECK_THROWS_AS((RelaxationParams{20.0, -1.0, 0.0, 0.0}.validate()), Error);
  CHECK(RelaxationParams::none().rate1() == 0.0);
}

TEST_CASE("relaxation operator", "[dynamics]") {
  const DimerChain model;
  const RelaxationParams p{15.0, 7.0, 0.0, 3000.0};
  const BasisSnapshot<2> basis = bloch_snapshot(model, 0.35);
  const BandMatrix<2>& u = basis.states;

  DensityMatrix<2> fixed = DensityMatrix<2>::Zero();
  for (int b = 0; b < 2; ++b) fixed += fermi_dirac(basis.energies(b), p.mu(), p.kT()) * u.col(b) * u.col(b).adjoint();
  CHECK(max_abs<2>(relaxation_apply(fixed, basis, p)) < 1e-16);

  const cplx c(0.2, -0.1);
  DensityMatrix<2> coh_band = DensityMatrix<2>::Zero();
  coh_band(0, 1) = c;
  coh_band(1, 0) = std::conj(c);
  const DensityMatrix<2> coh = u * coh_band * u.adjoint();
  const DensityMatrix<2> out_band = u.adjoint() * relaxation_apply(coh, basis, p) * u;
  CHECK(std::abs(out_band(0, 1) + c * p.rate2()) < 1e-15 * p.rate2());
  CHECK(hermiticity_error<2>(relaxation_apply(coh, basis, p)) == 0.0);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> ud(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = ud(rng);
    DensityMatrix<2> rho;
    rho << a, cplx(0.1 * ud(rng), 0.1 * ud(rng)), 0.0, 1.0 - a + 0.2 * ud(rng);
    rho(1, 0) = std::conj(rho(0, 1));
    const double f_sum = fermi_dirac(basis.energies(0), p.mu(), p.kT()) + fermi_dirac(basis.energies(1), p.mu(), p.kT());
    const double tr = relaxation_apply(rho, basis, p).trace().real();
    CHECK_THAT(tr, WithinAbs(-p.rate1() * (rho.trace().real() - f_sum), 1e-16));
  }
  // Default mu and Te with one filled band: the trace is conserved.
  const RelaxationParams d;
  DensityMatrix<2> ground = u.col(0) * u.col(0).adjoint();
  ground += 0.1 * (u.col(0) * u.col(1).adjoint() + u.col(1) * u.col(0).adjoint());
  CHECK(std::abs(relaxation_apply(ground, basis, d).trace()) < 1e-18);
}

TEST_CASE("master equation without relaxation reproduces the TDSE", "[dynamics]") {
  const DimerChain model;
  const Pulse pulse(PulseParams{1.0, 0.1, 100.0});
  const RelaxationParams off = RelaxationParams::none();
  const double dt = 0.1;
  for (double k : {0.05, 0.27}) {
    MasterState<2> m = master_initial(BasisKind::Houston, model, pulse, k, 0.0);
    StateVector<2> psi = valence_state(model, k);
    double worst = 0.0;
    // The TDSE runs at dt/100 so its O(dt^2) error sits below the tolerance.
    const double fine = dt / 100;
    for (int i = 0; i < 20000; ++i) {
      m = master_step(m, model, pulse, off, dt);
      for (int j = 0; j < 100; ++j) psi = tdse_step(psi, k, i * dt + j * fine, fine, model, pulse);
      if (i % 500 == 499) worst = std::max(worst, max_abs<2>(DensityMatrix<2>(m.orbital() - psi * psi.adjoint())));
    }
    CHECK(worst < 1e-10);
  }
}

TEST_CASE("master equation: ground state is stationary without field", "[dynamics]") {
  const DimerChain model;
  const NoField none;
  const RelaxationParams p;
  for (BasisKind kind : kAllBasisKinds) {
    MasterState<2> m = master_initial(kind, model, none, 0.6, 0.0);
    const DensityMatrix<2> start = m.rho;
    for (int i = 0; i < 2000; ++i) m = master_step(m, model, none, p, 0.1);
    CHECK(max_abs<2>(DensityMatrix<2>(m.rho - start)) < 1e-15);
    CHECK(frame_population(m, m.reference, 1) < 1e-15);
  }
}

TEST_CASE("master equation: conduction population decays with T1", "[dynamics]") {
  const DimerChain model;
  const NoField none;
  const RelaxationParams p;
  const double dt = 0.1;
  const double t1 = units::fs_to_au(p.T1_fs);
  for (BasisKind kind : kAllBasisKinds) {
    MasterState<2> m = excited_master(kind, model, none, 0.4);
    std::vector<double> t, log_n;
    const int steps = static_cast<int>(2.0 * t1 / dt);
    for (int i = 1; i <= steps; ++i) {
      m = master_step(m, model, none, p, dt);
      if (i % 100 == 0) {
        t.push_back(i * dt);
        log_n.push_back(std::log(frame_population(m, m.reference, 1)));
      }
    }
    const double fitted = -1.0 / stats::slope(t, log_n);
    CHECK_THAT(fitted, WithinRel(t1, 0.01));
    CHECK_THAT(m.rho.trace().real(), WithinAbs(1.0, 1e-12));
  }
}

TEST_CASE("master equation: Hermiticity, trace and positivity under a pulse", "[dynamics][property]") {
  const DimerChain model;
  const Pulse pulse(PulseParams{4.0, 0.1, 100.0});
  const RelaxationParams p;
  for (BasisKind kind : kAllBasisKinds) {
    MasterState<2> m = master_initial(kind, model, pulse, 0.15, 0.0);
    double trace0 = m.rho.trace().real();
    for (int i = 1; i <= 10000; ++i) {
      m = master_step(m, model, pulse, p, 0.1);
      CHECK(m.non_hermiticity <= 1e-12);
      if (i % 1000 == 0) {
        const double tr = m.rho.trace().real();
        CHECK(std::abs(tr - trace0) < 1e-10);
        CHECK(std::abs(m.rho.trace().imag()) < 1e-15);
        CHECK(min_eigenvalue<2>(m.rho) >= -1e-8);
        trace0 = tr;
      }
    }
  }
}

TEST_CASE("coefficient propagation conserves the norm", "[dynamics]") {
  const DimerChain model;
  const Pulse pulse(PulseParams{1.0, 0.1, 100.0});
  CoefficientState<2> c = coefficient_initial(model, pulse, 0.2, 0.0);
  for (int i = 0; i < 5000; ++i) c = coefficient_step(c, model, pulse, 0.1);
  CHECK(std::abs(c.c.norm() - 1.0) < 1e-12);
  CHECK_THAT(c.adiabatic.t, WithinRel(500.0, 1e-12));
}

TEST_CASE("k grid", "[dynamics]") {
  const KGrid g(8, 2.0);
  CHECK_THAT(g.spacing(), WithinRel(std::numbers::pi / 8.0, 1e-15));
  CHECK(g.point(0) == 0.0);
  const auto pts = g.points();
  REQUIRE(pts.size() == 8);
  CHECK(pts.back() < 2.0 * std::numbers::pi / 2.0);
  for (std::size_t i = 1; i < pts.size(); ++i) CHECK_THAT(pts[i] - pts[i - 1], WithinRel(g.spacing(), 1e-14));
  CHECK_THROWS_AS(KGrid(1, 1.0), Error);
  CHECK_THROWS_AS(KGrid(4, 0.0), Error);
}

TEST_CASE("central difference weights", "[dynamics]") {
  for (int order : {2, 4, 6}) {
    const auto w = central_difference_weights(order);
    // d/dk sin at 0, accurate to the stencil order.
    const double h = 1e-2;
    double d = 0.0;
    for (std::size_t m = 0; m < w.size(); ++m) d += w[m] * 2.0 * std::sin((m + 1) * h) / h;
    CHECK(std::abs(d - 1.0) < 10.0 * std::pow(h, order));
  }
  CHECK_THROWS_AS(central_difference_weights(3), Error);
}

TEST_CASE("SBE without field", "[dynamics]") {
  const DimerChain model;
  const NoField none;
  const RelaxationParams p{20.0, 10.0, 0.0, 0.0};
  SbeSystem<2> sbe(model, KGrid(32, model.lattice_constant()), p);
  const int j = 5;
  const double gap = sbe.energies(j)(1) - sbe.energies(j)(0);
  const cplx c0(1e-3, 2e-3);
  sbe.rho()[j](0, 1) = c0;
  sbe.rho()[j](1, 0) = std::conj(c0);
  const double dt = 0.1;
  const int steps = 4000;
  for (int i = 0; i < steps; ++i) sbe_step(sbe, none, dt);
  const double t = steps * dt;
  const cplx expected = c0 * std::exp(cplx(-p.rate2() * t, gap * t));
  // RK4 applied to dc/dt = z c / dt multiplies c by R(z) = sum_{n<=4} z^n / n! per step.
  const cplx z = cplx(-p.rate2(), gap) * dt;
  const cplx r = 1.0 + z + z * z / 2.0 + z * z * z / 6.0 + z * z * z * z / 24.0;
  CHECK(std::abs(sbe.rho()[j](0, 1) - c0 * std::pow(r, steps)) < 1e-12 * std::abs(c0));
  CHECK(std::abs(sbe.rho()[j](0, 1) - expected) < 2.0 * steps * std::pow(std::abs(z), 5) / 120.0 * std::abs(c0));
  for (int i = 0; i < 32; ++i) {
    CHECK(sbe.rho()[i](0, 0).real() == 1.0);
    CHECK(sbe.rho()[i](1, 1).real() == 0.0);
  }
}

TEST_CASE("SBE grid guard", "[dynamics]") {
  const DimerChain model;
  const KGrid grid(8, model.lattice_constant());
  const StaticRamp strong(StaticRampParams{1e12, 0.1});
  SbeSystem<2> sbe(model, grid, RelaxationParams{});
  try {
    for (int i = 0; i < 100; ++i) sbe_step(sbe, strong, 1.0);
    FAIL("expected GridTooCoarse");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GridTooCoarse);
  }
  CHECK_THROWS_AS(SbeSystem<2>(model, KGrid(3, model.lattice_constant()), RelaxationParams{}, 6), Error);
}
