#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>

#include "dlsim/dlsim.hpp"

using namespace dlsim;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

const DimerChainParams kDefault{};
const double kPi = std::numbers::pi;

}  // namespace

TEST_CASE("dimer Hamiltonian is diagonal at the zone edge", "[bandmodel]") {
  const BandMatrix<2> h = dimer_hamiltonian(kDefault, kPi / kDefault.a_L());
  CHECK_THAT(units::au_to_eV(h(0, 0).real()), WithinAbs(-0.76, 1e-12));
  CHECK_THAT(units::au_to_eV(h(1, 1).real()), WithinAbs(0.76, 1e-12));
  CHECK(std::abs(h(0, 1)) < 1e-15);
  CHECK(std::abs(h(1, 0)) < 1e-15);
}

TEST_CASE("dimer Hamiltonian at the zone centre", "[bandmodel]") {
  const BandMatrix<2> h = dimer_hamiltonian(kDefault, 0.0);
  CHECK_THAT(units::au_to_eV(h(0, 1).real()), WithinAbs(-3.16, 1e-12));
  const EigenSystem<2> es = eigensystem<2>(h);
  // +-sqrt(0.76^2 + 3.16^2) eV
  CHECK_THAT(units::au_to_eV(es.energies(1)), WithinAbs(3.2501, 5e-5));
  CHECK_THAT(units::au_to_eV(es.energies(1)), WithinRel(std::sqrt(0.76 * 0.76 + 3.16 * 3.16), 1e-13));
  CHECK_THAT(es.energies(0), WithinRel(-es.energies(1), 1e-14));
}

TEST_CASE("default parameters", "[bandmodel]") {
  CHECK(kDefault.a_L_angstrom == 5.65);
  CHECK(kDefault.delta_eV == 1.52);
  CHECK(kDefault.t_H_eV == 1.58);
  CHECK_THROWS_AS(DimerChain(DimerChainParams{-1.0, 1.52, 1.58}), Error);
  CHECK_THROWS_AS(DimerChain(DimerChainParams{5.65, -0.1, 1.58}), Error);
  CHECK_THROWS_AS(DimerChain(DimerChainParams{5.65, 1.52, 0.0}), Error);
  CHECK_NOTHROW(DimerChain(DimerChainParams{5.65, 0.0, 1.58}));
}

TEST_CASE("dimer derivative examples", "[bandmodel]") {
  const BandMatrix<2> d0 = dimer_hamiltonian_derivative(kDefault, 0.0);
  CHECK(d0.cwiseAbs().maxCoeff() == 0.0);
  const BandMatrix<2> dedge = dimer_hamiltonian_derivative(kDefault, kPi / kDefault.a_L());
  CHECK_THAT(dedge(0, 1).real(), WithinRel(kDefault.t_H() * kDefault.a_L(), 1e-14));
  CHECK_THAT(units::au_to_eV(dedge(0, 1).real()) * units::au_to_angstrom(1.0), WithinRel(1.58 * 5.65, 1e-12));
}

TEST_CASE("Hermiticity and derivative on a 1024-point grid", "[bandmodel][property]") {
  const DimerChain model;
  const double a = model.lattice_constant();
  const double step = 1e-6 / a;
  const double scale = kDefault.t_H() * a;
  for (int j = 0; j < 1024; ++j) {
    const double k = 2.0 * kPi * j / (a * 1024);
    const BandMatrix<2> h = model.hamiltonian_at(k);
    CHECK(hermiticity_error<2>(h) <= 1e-12);
    const BandMatrix<2> fd = (model.hamiltonian_at(k + step) - model.hamiltonian_at(k - step)) / (2.0 * step);
    CHECK(max_abs<2>(fd - model.hamiltonian_derivative_at(k)) <= 1e-8 * scale);
  }
}

TEST_CASE("zone periodicity holds up to the orbital embedding", "[bandmodel][property]") {
  const DimerChain model;
  const double g = model.reciprocal_period();
  const BandMatrix<2> v = model.zone_boundary_unitary();
  for (int j = 0; j < 64; ++j) {
    const double k = -1.3 + 0.05 * j;
    const BandMatrix<2> h = model.hamiltonian_at(k);
    CHECK(max_abs<2>(model.hamiltonian_at(k + g) - v * h * v.adjoint()) < 1e-14);
    CHECK(max_abs<2>(model.hamiltonian_at(k + 2.0 * g) - h) < 1e-14);
    const RealBandVector<2> e0 = eigenvalues<2>(h);
    const RealBandVector<2> e1 = eigenvalues<2>(model.hamiltonian_at(k + g));
    CHECK((e0 - e1).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("reduced mass at the direct gap", "[bandmodel]") {
  const DimerChain model;
  const double a = model.lattice_constant();
  const double k0 = kPi / a;
  const double h = 1e-3 / a;
  auto gap = [&](double k) {
    const RealBandVector<2> e = eigenvalues<2>(model.hamiltonian_at(k));
    return e(1) - e(0);
  };
  const double curvature = (gap(k0 + h) - 2.0 * gap(k0) + gap(k0 - h)) / (h * h);
  const double mass_fd = 1.0 / curvature;
  CHECK_THAT(mass_fd, WithinRel(model.analytic_reduced_mass(), 1e-5));
  CHECK_THAT(units::au_to_eV(gap(k0)), WithinAbs(1.52, 1e-13));

  const double gaas = 1.0 / (1.0 / 0.067 + 1.0 / 0.08);
  CHECK_THAT(model.analytic_reduced_mass(), WithinRel(gaas, 0.02));
  CHECK_THAT(model.analytic_reduced_mass(), WithinAbs(0.0363, 5e-5));
}

TEST_CASE("shifted wavevector", "[bandmodel][fields]") {
  CHECK(shifted_wavevector(0.3, 0.0) == 0.3);
  const DimerChain model;
  const double g = model.reciprocal_period();
  const BandMatrix<2> v = model.zone_boundary_unitary();
  const double kappa = shifted_wavevector(0.0, g);
  CHECK(max_abs<2>(model.hamiltonian_at(kappa) - v * model.hamiltonian_at(0.0) * v.adjoint()) < 1e-14);

  const StaticRampParams p;
  const StaticRamp ramp(p);
  const double t_dc = units::fs_to_au(p.T_dc_fs);
  const double e_dc = units::V_per_m_to_au(p.E_dc_V_per_m);
  CHECK_THAT(shifted_wavevector(0.2, ramp, t_dc), WithinRel(0.2 - 0.5 * e_dc * t_dc, 1e-15));
}
