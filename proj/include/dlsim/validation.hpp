#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>
#include <vector>

#include "dlsim/bandmodel.hpp"
#include "dlsim/config.hpp"
#include "dlsim/observables.hpp"
#include "dlsim/runner.hpp"
#include "dlsim/units.hpp"

namespace dlsim {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

namespace stats {

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

/// Least-squares slope of y against x.
inline double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

inline double rms(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s / static_cast<double>(v.size()));
}

}  // namespace stats

/// Rows of a series with lo <= t_fs <= hi, for the named channels.
struct Window {
  std::vector<double> t;
  std::vector<std::vector<double>> columns;
};

inline Window window(const ObservableSeries& s, const std::vector<std::string>& names, double lo, double hi) {
  Window w;
  w.columns.resize(names.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double t = s.times()[i];
    if (t < lo - 1e-9 || t > hi + 1e-9) continue;
    w.t.push_back(t);
    for (std::size_t c = 0; c < names.size(); ++c) w.columns[c].push_back(s.channel(names[c])[i]);
  }
  return w;
}

namespace detail {

inline std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

inline std::string fixed(double v, int digits) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline CheckResult check(std::string name, bool pass, std::string detail) {
  return {std::move(name), pass, std::move(detail)};
}

}  // namespace detail

/// BZ average of the first-order static-response conduction population
/// |E d_cv / (eps_c - eps_v)|^2 of the dimer chain, written out analytically:
/// with h = -2 t_H cos(a k / 2) and r = sqrt(Delta^2/4 + h^2), the dipole is
/// |dh/dk| Delta / (4 r^2) and the gap 2 r.
inline double static_response_population(const DimerChainParams& p, double field_au, int n_k = 8192) {
  const double a = p.a_L();
  const double t = p.t_H();
  const double delta = p.delta();
  double sum = 0.0;
  for (int j = 0; j < n_k; ++j) {
    const double k = 2.0 * std::numbers::pi * j / (a * n_k);
    const double h = -2.0 * t * std::cos(0.5 * a * k);
    const double dh = t * a * std::sin(0.5 * a * k);
    const double r2 = 0.25 * delta * delta + h * h;
    const double d = std::abs(dh) * delta / (4.0 * r2);
    const double amp = field_au * d / (2.0 * std::sqrt(r2));
    sum += amp * amp;
  }
  return sum / n_k;
}

// ---------------------------------------------------------------------------
// One check set per preset.

inline std::vector<CheckResult> check_fig1(const ScenarioConfig& cfg, const ObservableSeries& s) {
  std::vector<CheckResult> out;
  const double t_dc = cfg.ramp.T_dc_fs;
  const double t_end = s.times().back();
  const Window tail = window(s, {"n_B", "n_H", "n_PH"}, t_end - 20.0, t_end);
  const double nh = stats::mean(tail.columns[1]);
  const double nph = stats::mean(tail.columns[2]);

  const double drift = std::abs(stats::slope(tail.t, tail.columns[1])) * 20.0 / nh;
  out.push_back(detail::check("n_H plateau drift over final 20 fs < 1e-3", drift < 1e-3,
                              "relative drift " + detail::sci(drift)));

  const Window after = window(s, {"n_B"}, t_dc, t_end);
  bool increasing = true;
  for (std::size_t i = 1; i < after.t.size(); ++i) increasing &= after.columns[0][i] > after.columns[0][i - 1];
  out.push_back(detail::check("n_B strictly increasing after T_dc", increasing,
                              std::to_string(after.t.size()) + " samples"));

  out.push_back(detail::check("plateau n_PH < 0.01 plateau n_H", nph < 0.01 * nh,
                              "n_PH " + detail::sci(nph) + ", n_H " + detail::sci(nh)));

  const double oracle = static_response_population(cfg.model, units::V_per_m_to_au(cfg.ramp.E_dc_V_per_m));
  const double rel = std::abs(nh / oracle - 1.0);
  out.push_back(detail::check("plateau n_H matches static perturbation theory within 5%", rel < 0.05,
                              "n_H " + detail::sci(nh) + ", oracle " + detail::sci(oracle) + ", rel " +
                                  detail::sci(rel)));
  return out;
}

inline std::vector<CheckResult> check_fig2(const ScenarioConfig& cfg, const ObservableSeries& s) {
  std::vector<CheckResult> out;
  const double tp = cfg.pulse.T_pulse_fs;
  const Window pulse = window(s, {"A_au", "E_au", "n_B", "n_H", "n_PH"}, 0.0, tp);
  std::vector<double> a2, e2;
  for (double a : pulse.columns[0]) a2.push_back(a * a);
  for (double e : pulse.columns[1]) e2.push_back(e * e);
  const double c_h = stats::pearson(pulse.columns[3], e2);
  const double c_b = stats::pearson(pulse.columns[2], a2);
  out.push_back(detail::check("corr(n_H, E^2) > 0.99 over the pulse", c_h > 0.99, "corr " + detail::sci(c_h)));
  out.push_back(detail::check("corr(n_B, A^2) > 0.99 over the pulse", c_b > 0.99, "corr " + detail::sci(c_b)));

  const double peak_h = *std::max_element(pulse.columns[3].begin(), pulse.columns[3].end());
  const Window post = window(s, {"n_PH"}, tp + 1e-6, s.times().back());
  const double residual = post.t.empty() ? 0.0 : *std::max_element(post.columns[0].begin(), post.columns[0].end());
  out.push_back(detail::check("post-pulse n_PH < 1e-2 peak n_H", !post.t.empty() && residual < 1e-2 * peak_h,
                              "n_PH " + detail::sci(residual) + ", peak n_H " + detail::sci(peak_h)));
  return out;
}

inline std::vector<CheckResult> check_fig3(const ScenarioConfig& cfg, const ObservableSeries& s) {
  std::vector<CheckResult> out;
  const double tp = cfg.pulse.T_pulse_fs;

  const Window post = window(s, {"n_B", "n_H", "n_PH"}, tp + 1e-6, s.times().back());
  double spread = post.t.empty() ? 1.0 : 0.0;
  for (std::size_t i = 0; i < post.t.size(); ++i) {
    const double lo = std::min({post.columns[0][i], post.columns[1][i], post.columns[2][i]});
    const double hi = std::max({post.columns[0][i], post.columns[1][i], post.columns[2][i]});
    spread = std::max(spread, (hi - lo) / hi);
  }
  out.push_back(detail::check("post-pulse populations agree across bases within 5%", spread < 0.05,
                              "max relative spread " + detail::sci(spread)));

  // Step-like growth: n_PH rises nearly monotonically, and most of the rise
  // happens within a quarter of a half-cycle of a crest of |E|.
  const Window pulse = window(s, {"E_au", "n_H", "n_PH"}, 0.0, tp);
  const std::vector<double>& e = pulse.columns[0];
  const std::vector<double>& nph = pulse.columns[2];
  std::vector<double> crests;
  for (std::size_t i = 1; i + 1 < e.size(); ++i)
    if (std::abs(e[i]) >= std::abs(e[i - 1]) && std::abs(e[i]) > std::abs(e[i + 1])) crests.push_back(pulse.t[i]);
  const double half_width = units::au_to_fs(std::numbers::pi / (4.0 * units::eV_to_au(cfg.pulse.omega0_eV)));
  double variation = 0.0, near = 0.0, rise = 0.0;
  for (std::size_t i = 1; i < nph.size(); ++i) {
    const double d = nph[i] - nph[i - 1];
    variation += std::abs(d);
    if (d <= 0.0) continue;
    rise += d;
    const double tm = 0.5 * (pulse.t[i] + pulse.t[i - 1]);
    for (double c : crests)
      if (std::abs(tm - c) <= half_width) {
        near += d;
        break;
      }
  }
  const double net = nph.back() - nph.front();
  const double monotone = net > 0.0 ? variation / net : INFINITY;
  const double crest_share = rise > 0.0 ? near / rise : 0.0;
  std::vector<double> e2;
  for (double x : e) e2.push_back(x * x);
  const double c_ph = stats::pearson(nph, e2);
  const double c_h = stats::pearson(pulse.columns[1], e2);
  const bool steplike = monotone < 1.5 && crest_share > 0.75 && c_ph < c_h;
  out.push_back(detail::check("n_PH rises step-like at field crests, not tracking E^2", steplike,
                              "variation/net " + detail::sci(monotone) + ", rise near crests " +
                                  detail::sci(crest_share) + ", corr(n_PH,E^2) " + detail::sci(c_ph) +
                                  " vs corr(n_H,E^2) " + detail::sci(c_h)));
  return out;
}

inline std::vector<CheckResult> check_fig4(const ScenarioConfig&, const ObservableSeries& s) {
  const Window w = window(s, {"n_B", "n_H", "n_PH"}, 20.0, s.times().back());
  double spread = w.t.empty() ? 1.0 : 0.0;
  double worst_t = 0.0, last = 1.0;
  for (std::size_t i = 0; i < w.t.size(); ++i) {
    const double lo = std::min({w.columns[0][i], w.columns[1][i], w.columns[2][i]});
    const double hi = std::max({w.columns[0][i], w.columns[1][i], w.columns[2][i]});
    last = (hi - lo) / hi;
    if (last > spread) {
      spread = last;
      worst_t = w.t[i];
    }
  }
  return {detail::check("three bases agree within 10% after 20 fs", spread < 0.10,
                        "max relative spread " + detail::sci(spread) + " at t = " + detail::fixed(worst_t, 2) +
                            " fs, final " + detail::sci(last))};
}

inline std::vector<CheckResult> check_fig5(const ScenarioConfig& cfg, const ObservableSeries& s) {
  std::vector<CheckResult> out;
  const double t_end = s.times().back();
  const Window tail = window(s, {"J_au_bloch", "J_au_houston", "J_au_polarized"}, t_end - 10.0, t_end);
  const double jb = std::abs(stats::mean(tail.columns[0]));
  const double jh = stats::mean(tail.columns[1]);
  const double jp = std::abs(stats::mean(tail.columns[2]));
  out.push_back(detail::check("|J_polarized| < 0.05 |J_houston| (final 10 fs)", jp < 0.05 * std::abs(jh),
                              "J_pol " + detail::sci(jp) + ", J_H " + detail::sci(jh)));

  const Window late = window(s, {"J_au_houston"}, t_end - 20.0, t_end);
  const auto [lo, hi] = std::minmax_element(late.columns[0].begin(), late.columns[0].end());
  const double mean_h = stats::mean(late.columns[0]);
  const bool one_sign = (*lo > 0.0) || (*hi < 0.0);
  const double flat = (*hi - *lo) / std::abs(mean_h);
  out.push_back(detail::check("J_houston is a nonzero plateau", one_sign && flat < 0.05,
                              "mean " + detail::sci(mean_h) + ", spread/mean over final 20 fs " + detail::sci(flat)));

  const Window grow = window(s, {"J_au_bloch"}, cfg.ramp.T_dc_fs, t_end);
  int dips = 0;
  double last_dip = 0.0;
  for (std::size_t i = 1; i < grow.t.size(); ++i)
    if (!(std::abs(grow.columns[0][i]) > std::abs(grow.columns[0][i - 1]))) {
      ++dips;
      last_dip = grow.t[i];
    }
  std::string dip_text = std::to_string(dips) + " of " + std::to_string(grow.t.size() - 1) + " samples non-increasing";
  if (dips > 0) dip_text += ", last at t = " + detail::fixed(last_dip, 2) + " fs";
  out.push_back(detail::check("|J_bloch| grows monotonically after T_dc", dips == 0,
                              dip_text + "; final-10-fs |J_B| " + detail::sci(jb)));

  const Window all = window(s, {"J_au_polarized", "J_au_tdse"}, 0.0, t_end);
  std::vector<double> diff;
  for (std::size_t i = 0; i < all.t.size(); ++i) diff.push_back(all.columns[0][i] - all.columns[1][i]);
  const double rel = stats::rms(diff) / stats::rms(all.columns[1]);
  out.push_back(detail::check("J_polarized matches TDSE current within 5% RMS", rel < 0.05,
                              "relative RMS difference " + detail::sci(rel)));
  return out;
}

inline std::vector<CheckResult> check_gauge(const RunReport& r) {
  const double dev = r.metrics.at("gauge_max_population_deviation");
  return {detail::check("velocity vs length gauge Houston populations agree to 1e-8", dev < 1e-8,
                        "max per-k deviation " + detail::sci(dev))};
}

/// Both grid sizes of the SBE comparison: the configured N_k and its double.
inline std::vector<CheckResult> check_sbe(double diff_n, double diff_2n, int n_k) {
  const double ratio = diff_n / diff_2n;
  return {detail::check("master(Houston) vs SBE max-abs difference < 1e-3 at N_k = " + std::to_string(n_k),
                        diff_n < 1e-3, "difference " + detail::sci(diff_n)),
          detail::check("difference drops >= 4x when N_k doubles", ratio >= 4.0,
                        "N_k " + std::to_string(2 * n_k) + " difference " + detail::sci(diff_2n) + ", ratio " +
                            detail::sci(ratio))};
}

/// Polarized-Houston projection after the ramp. `leak` is how far n_PH has
/// moved from its initial value (zero) over the first 20 fs after T_dc;
/// `flat` is its change within that window relative to the n_H level.
struct AdiabaticDrift {
  double leak = 0.0;
  double flat = 0.0;
};

inline AdiabaticDrift adiabatic_drift(const ScenarioConfig& cfg, const ObservableSeries& s) {
  const double t0 = cfg.ramp.T_dc_fs;
  const Window w = window(s, {"n_H", "n_PH"}, t0, t0 + 20.0);
  const auto [lo, hi] = std::minmax_element(w.columns[1].begin(), w.columns[1].end());
  double leak = 0.0;
  for (double v : w.columns[1]) leak = std::max(leak, std::abs(v - s.channel("n_PH").front()));
  return {leak, (*hi - *lo) / stats::mean(w.columns[0])};
}

inline std::vector<CheckResult> check_adiabatic(const AdiabaticDrift& base, const AdiabaticDrift& scaled) {
  const double ratio = base.leak / scaled.leak;
  return {detail::check("n_PH drift drops >= 3x under (E_dc/2, 2 T_dc)", ratio >= 3.0,
                        "base " + detail::sci(base.leak) + ", scaled " + detail::sci(scaled.leak) + ", ratio " +
                            detail::sci(ratio)),
          detail::check("n_PH constant after the ramp to < 1e-6 of n_H", base.flat < 1e-6 && scaled.flat < 1e-6,
                        "base " + detail::sci(base.flat) + ", scaled " + detail::sci(scaled.flat))};
}

// ---------------------------------------------------------------------------

/// Runs a preset (plus overrides) and evaluates its checks. Presets whose
/// check needs a second run (validate_sbe, validate_adiabatic) perform it.
inline std::vector<CheckResult> validate_preset(std::string_view name, const std::vector<Assignment>& overrides = {}) {
  ScenarioConfig cfg = load_config(name, "", "config", overrides);
  cfg.output_path.clear();
  if (name == "validate_sbe") {
    cfg.compare_master = true;
    const RunResult base = run_scenario(cfg);
    ScenarioConfig fine = cfg;
    fine.n_k *= 2;
    const RunResult doubled = run_scenario(fine);
    return check_sbe(base.report.metrics.at("sbe_master_max_abs_diff"),
                     doubled.report.metrics.at("sbe_master_max_abs_diff"), cfg.n_k);
  }
  if (name == "validate_adiabatic") {
    const RunResult base = run_scenario(cfg);
    ScenarioConfig scaled = cfg;
    scaled.ramp.E_dc_V_per_m *= 0.5;
    scaled.ramp.T_dc_fs *= 2.0;
    scaled.t_end_fs += cfg.ramp.T_dc_fs;
    const RunResult slow = run_scenario(scaled);
    return check_adiabatic(adiabatic_drift(cfg, base.series), adiabatic_drift(scaled, slow.series));
  }
  const RunResult r = run_scenario(cfg);
  if (name == "fig1_static") return check_fig1(cfg, r.series);
  if (name == "fig2_offres_weak") return check_fig2(cfg, r.series);
  if (name == "fig3_offres_strong") return check_fig3(cfg, r.series);
  if (name == "fig4_resonant") return check_fig4(cfg, r.series);
  if (name == "fig5_current") return check_fig5(cfg, r.series);
  if (name == "validate_gauge") return check_gauge(r.report);
  throw Error(ErrorCode::UnknownPreset, "no checks for preset '" + std::string(name) + "'");
}

}  // namespace dlsim
