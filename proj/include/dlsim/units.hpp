#pragma once

// Conversion constants between laboratory units and Hartree atomic units
// (hbar = e = m_e = 1). CODATA 2018 values. Every I/O boundary converts
// through this header; nothing else in the library carries a unit.

namespace dlsim::units {

inline constexpr double hartree_eV = 27.211386245988;
inline constexpr double bohr_angstrom = 0.529177210903;
inline constexpr double time_fs = 0.02418884326585747;
inline constexpr double field_V_per_m = 5.14220674763e11;
inline constexpr double boltzmann_hartree_per_K = 3.166811563455e-6;

inline constexpr double eV_to_au(double v) { return v / hartree_eV; }
inline constexpr double au_to_eV(double v) { return v * hartree_eV; }

inline constexpr double angstrom_to_au(double v) { return v / bohr_angstrom; }
inline constexpr double au_to_angstrom(double v) { return v * bohr_angstrom; }

inline constexpr double fs_to_au(double v) { return v / time_fs; }
inline constexpr double au_to_fs(double v) { return v * time_fs; }

inline constexpr double V_per_m_to_au(double v) { return v / field_V_per_m; }
inline constexpr double MV_per_cm_to_au(double v) { return v * 1.0e8 / field_V_per_m; }
inline constexpr double au_to_MV_per_cm(double v) { return v * field_V_per_m / 1.0e8; }

inline constexpr double kelvin_to_au(double v) { return v * boltzmann_hartree_per_K; }

}  // namespace dlsim::units
