// Prints the dimer-chain bands, gap and interband dipole across the zone.
//   example_band_structure [points]

#include <cstdio>
#include <cstdlib>
#include <numbers>

#include "dlsim/dlsim.hpp"

int main(int argc, char** argv) {
  const int n = argc > 1 ? std::atoi(argv[1]) : 33;
  if (n < 2) {
    std::fprintf(stderr, "need at least 2 points\n");
    return 1;
  }
  const dlsim::DimerChain model;
  const double a = model.lattice_constant();
  std::printf("# k_over_pi_a,eps_v_eV,eps_c_eV,gap_eV,abs_d_cv_au\n");
  for (int i = 0; i < n; ++i) {
    const double k = (2.0 * i / (n - 1) - 1.0) * std::numbers::pi / a;
    const dlsim::RealBandVector<2> e = dlsim::eigenvalues<2>(model.hamiltonian_at(k));
    const double d = std::abs(dlsim::dipole_elements<2>(model, k)(1, 0));
    std::printf("%.6f,%.10f,%.10f,%.10f,%.6e\n", k * a / std::numbers::pi, dlsim::units::au_to_eV(e(0)),
                dlsim::units::au_to_eV(e(1)), dlsim::units::au_to_eV(e(1) - e(0)), d);
  }
  std::printf("# reduced mass at the gap: %.5f m_e\n", model.analytic_reduced_mass());
  return 0;
}
