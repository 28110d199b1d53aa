#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <utility>

#include "dlsim/bandmodel.hpp"
#include "dlsim/errors.hpp"
#include "dlsim/units.hpp"

namespace dlsim {

/// Homogeneous driving field along the chain. A_at and E_at must satisfy
/// E = -dA/dt everywhere; outside support() A is constant and E vanishes.
class Waveform {
 public:
  virtual ~Waveform() = default;

  virtual double A_at(double t) const = 0;
  virtual double E_at(double t) const = 0;
  /// [t_start, t_end] in atomic time units; t_end may be +inf.
  virtual std::pair<double, double> support() const = 0;
};

class NoField final : public Waveform {
 public:
  double A_at(double) const override { return 0.0; }
  double E_at(double) const override { return 0.0; }
  std::pair<double, double> support() const override { return {0.0, 0.0}; }
};

struct StaticRampParams {
  double E_dc_V_per_m = 1.0;
  double T_dc_fs = 20.0;

  void validate() const {
    if (!(T_dc_fs > 0.0)) throw Error(ErrorCode::InvalidArgument, "T_dc must be positive");
  }
};

struct PulseParams {
  double E0_MV_per_cm = 1.0;
  double omega0_eV = 0.1;
  double T_pulse_fs = 100.0;

  void validate() const {
    if (!(T_pulse_fs > 0.0)) throw Error(ErrorCode::InvalidArgument, "T_pulse must be positive");
    if (!(omega0_eV > 0.0)) throw Error(ErrorCode::InvalidArgument, "omega0 must be positive");
  }
};

// Smooth-step ramp: E rises as 3x^2 - 2x^3 over [0, T_dc] and stays at E_dc.
inline double static_ramp_A(const StaticRampParams& p, double t) {
  const double e_dc = units::V_per_m_to_au(p.E_dc_V_per_m);
  const double t_dc = units::fs_to_au(p.T_dc_fs);
  if (t < 0.0) return 0.0;
  if (t <= t_dc) {
    const double x = t / t_dc;
    return -e_dc * t_dc * (x * x * x - 0.5 * x * x * x * x);
  }
  return -e_dc * (t - t_dc) - 0.5 * e_dc * t_dc;
}

inline double static_ramp_E(const StaticRampParams& p, double t) {
  const double e_dc = units::V_per_m_to_au(p.E_dc_V_per_m);
  const double t_dc = units::fs_to_au(p.T_dc_fs);
  if (t < 0.0) return 0.0;
  if (t <= t_dc) {
    const double x = t / t_dc;
    return e_dc * (3.0 * x * x - 2.0 * x * x * x);
  }
  return e_dc;
}

// A(t) = -(E0/w) sin(w s) cos^4(pi s / T), s = t - T/2, on [0, T].
inline double pulse_A(const PulseParams& p, double t) {
  const double t_pulse = units::fs_to_au(p.T_pulse_fs);
  if (t < 0.0 || t > t_pulse) return 0.0;
  const double e0 = units::MV_per_cm_to_au(p.E0_MV_per_cm);
  const double w = units::eV_to_au(p.omega0_eV);
  const double s = t - 0.5 * t_pulse;
  const double c = std::cos(std::numbers::pi * s / t_pulse);
  return -(e0 / w) * std::sin(w * s) * c * c * c * c;
}

inline double pulse_E(const PulseParams& p, double t) {
  const double t_pulse = units::fs_to_au(p.T_pulse_fs);
  if (t < 0.0 || t > t_pulse) return 0.0;
  const double e0 = units::MV_per_cm_to_au(p.E0_MV_per_cm);
  const double w = units::eV_to_au(p.omega0_eV);
  const double s = t - 0.5 * t_pulse;
  const double phase = std::numbers::pi * s / t_pulse;
  const double c = std::cos(phase);
  const double sn = std::sin(phase);
  const double c3 = c * c * c;
  return e0 * std::cos(w * s) * c3 * c -
         (4.0 * std::numbers::pi * e0 / (w * t_pulse)) * std::sin(w * s) * c3 * sn;
}

class StaticRamp final : public Waveform {
 public:
  explicit StaticRamp(StaticRampParams p) : p_(p) { p_.validate(); }
  double A_at(double t) const override { return static_ramp_A(p_, t); }
  double E_at(double t) const override { return static_ramp_E(p_, t); }
  std::pair<double, double> support() const override {
    return {0.0, std::numeric_limits<double>::infinity()};
  }
  double ramp_end() const { return units::fs_to_au(p_.T_dc_fs); }
  const StaticRampParams& params() const { return p_; }

 private:
  StaticRampParams p_;
};

class Pulse final : public Waveform {
 public:
  explicit Pulse(PulseParams p) : p_(p) { p_.validate(); }
  double A_at(double t) const override { return pulse_A(p_, t); }
  double E_at(double t) const override { return pulse_E(p_, t); }
  std::pair<double, double> support() const override {
    return {0.0, units::fs_to_au(p_.T_pulse_fs)};
  }
  const PulseParams& params() const { return p_; }

 private:
  PulseParams p_;
};

inline double shifted_wavevector(double k, const Waveform& w, double t) {
  return shifted_wavevector(k, w.A_at(t));
}

}  // namespace dlsim
