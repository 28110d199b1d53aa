#pragma once

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "dlsim/bandmodel.hpp"
#include "dlsim/bases.hpp"
#include "dlsim/config.hpp"
#include "dlsim/csv.hpp"
#include "dlsim/dynamics.hpp"
#include "dlsim/errors.hpp"
#include "dlsim/fields.hpp"
#include "dlsim/observables.hpp"
#include "dlsim/spectral.hpp"

namespace dlsim {

/// Invariant monitoring collected over every k and step of a run.
struct RunDiagnostics {
  double max_non_hermiticity = 0.0;
  double max_trace_drift = 0.0;
  double min_eigenvalue = std::numeric_limits<double>::infinity();
  double max_norm_drift = 0.0;

  void merge(const RunDiagnostics& o) {
    max_non_hermiticity = std::max(max_non_hermiticity, o.max_non_hermiticity);
    max_trace_drift = std::max(max_trace_drift, o.max_trace_drift);
    min_eigenvalue = std::min(min_eigenvalue, o.min_eigenvalue);
    max_norm_drift = std::max(max_norm_drift, o.max_norm_drift);
  }
};

struct RunReport {
  std::vector<std::pair<std::string, std::string>> config;
  double wall_seconds = 0.0;
  int threads = 1;
  int n_steps = 0;
  RunDiagnostics diagnostics;
  /// Engine-specific scalar results, e.g. the gauge or SBE comparisons.
  std::map<std::string, double> metrics;
  std::vector<std::string> warnings;
  std::string output_path;
  std::string digest;  // SHA-256 of the CSV text

  std::string format() const {
    std::ostringstream o;
    o << "# driven-lattice-sim v" << kVersion << " run report\n";
    o << "[config]\n";
    for (const auto& [k, v] : config) o << k << " = " << v << "\n";
    o << "[run]\n";
    o << "wall_seconds = " << detail::format_double(wall_seconds) << "\n";
    o << "threads = " << threads << "\n";
    o << "steps = " << n_steps << "\n";
    o << "[invariants]\n";
    o << "max_non_hermiticity = " << detail::format_double(diagnostics.max_non_hermiticity) << "\n";
    o << "max_trace_drift = " << detail::format_double(diagnostics.max_trace_drift) << "\n";
    o << "min_rho_eigenvalue = "
      << (std::isinf(diagnostics.min_eigenvalue) ? std::string("n/a")
                                                 : detail::format_double(diagnostics.min_eigenvalue))
      << "\n";
    o << "max_norm_drift = " << detail::format_double(diagnostics.max_norm_drift) << "\n";
    if (!metrics.empty()) {
      o << "[metrics]\n";
      for (const auto& [k, v] : metrics) o << k << " = " << detail::format_double(v) << "\n";
    }
    o << "[warnings]\n";
    for (const std::string& w : warnings) o << w << "\n";
    o << "[output]\n";
    o << "path = " << output_path << "\n";
    o << "sha256 = " << digest << "\n";
    return o.str();
  }
};

struct RunResult {
  ObservableSeries series;
  RunReport report;
};

inline std::string sha256_hex(const std::string& text) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(text.data(), text.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error(ErrorCode::IoError, "SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xF];
  }
  return out;
}

/// Worker count: SIM_THREADS wins over the config; 0 means all cores.
inline int resolve_threads(int configured) {
  int n = configured;
  if (const char* env = std::getenv("SIM_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 0)
      throw Error(ErrorCode::UnitParseError, std::string("SIM_THREADS = '") + env + "' is not a thread count");
    n = static_cast<int>(v);
  }
  if (n <= 0) n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return n;
}

/// Runs body(begin, end) over contiguous chunks of [0, n) on `threads`
/// workers. The first exception thrown by any worker is rethrown.
template <class Body>
void parallel_chunks(int n, int threads, Body&& body) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    body(0, n);
    return;
  }
  std::vector<std::exception_ptr> errors(threads);
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    const int begin = static_cast<int>(static_cast<long>(n) * w / threads);
    const int end = static_cast<int>(static_cast<long>(n) * (w + 1) / threads);
    pool.emplace_back([&, w, begin, end] {
      try {
        body(begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (std::thread& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

namespace detail {

// Per-k samples laid out [output][channel].
struct KTrace {
  std::vector<double> values;
  RunDiagnostics diag;
  double gauge_deviation = 0.0;
};

inline std::string suffixed(std::string base, const std::string& suffix) {
  return suffix.empty() ? base : base + "_" + suffix;
}

inline std::string population_channel(BasisKind kind, const std::string& suffix = {}) {
  return suffixed("n_" + std::string(channel_tag(kind)), suffix);
}

// Population above the single occupied band.
template <int N, class Pop>
double excited(int dim, Pop&& pop) {
  double n = 0.0;
  for (int b = 1; b < dim; ++b) n += pop(b);
  return n;
}

struct Timeline {
  int n_steps;
  std::vector<int> outputs;  // ascending step indices
  double dt;
  int n_out() const { return static_cast<int>(outputs.size()); }
};

template <int N>
KTrace tdse_trace(const ScenarioConfig& cfg, const BandModel<N>& model, const Waveform& w, double k,
                  const Timeline& tl, int n_ch) {
  KTrace tr;
  tr.values.reserve(static_cast<std::size_t>(tl.n_out() * n_ch));
  StateVector<N> psi = valence_state(model, k);
  std::vector<BasisSnapshot<N>> snaps;
  for (BasisKind b : cfg.bases) snaps.push_back(initial_snapshot(b, model, w, k, 0.0));
  std::optional<CoefficientState<N>> coef;
  if (cfg.compare_length) coef = coefficient_initial(model, w, k, 0.0);
  const int dim = model.n_bands();

  std::size_t next_out = 0;
  for (int s = 0;; ++s) {
    const double t = s * tl.dt;
    if (next_out < tl.outputs.size() && tl.outputs[next_out] == s) {
      ++next_out;
      for (const BasisSnapshot<N>& snap : snaps)
        tr.values.push_back(
            excited<N>(dim, [&](int b) { return project_population<N>(psi, t, snap, b, tl.dt); }));
      tr.values.push_back(current<N>(psi, model, w, k, t));
      if (coef) {
        const double n_len = excited<N>(dim, [&](int b) { return std::norm(coef->c(b)); });
        const double n_vel = excited<N>(
            dim, [&](int b) { return project_population<N>(psi, t, coef->adiabatic, b, tl.dt); });
        tr.values.push_back(n_len);
        tr.gauge_deviation = std::max(tr.gauge_deviation, std::abs(n_len - n_vel));
      }
      tr.diag.max_norm_drift = std::max(tr.diag.max_norm_drift, std::abs(psi.norm() - 1.0));
    }
    if (s == tl.n_steps) break;
    psi = tdse_step<N>(psi, k, t, tl.dt, model, w);
    for (BasisSnapshot<N>& snap : snaps) snap = advance(snap, model, w, tl.dt);
    if (coef) *coef = coefficient_step(*coef, model, w, tl.dt);
  }
  return tr;
}

template <int N>
KTrace master_trace(const ScenarioConfig& cfg, const BandModel<N>& model, const Waveform& w, double k,
                    const Timeline& tl, int n_ch) {
  KTrace tr;
  tr.values.reserve(static_cast<std::size_t>(tl.n_out() * n_ch));
  std::vector<MasterState<N>> states;
  for (BasisKind r : cfg.references) states.push_back(master_initial(r, model, w, k, 0.0));

  // Projection snapshots not already carried by a master state.
  const BasisSnapshot<N> bloch = bloch_snapshot(model, k);
  std::optional<BasisSnapshot<N>> own_polarized;
  int polarized_ref = -1;
  for (std::size_t r = 0; r < cfg.references.size(); ++r)
    if (cfg.references[r] == BasisKind::PolarizedHouston) polarized_ref = static_cast<int>(r);
  const bool wants_polarized =
      std::find(cfg.bases.begin(), cfg.bases.end(), BasisKind::PolarizedHouston) != cfg.bases.end();
  if (wants_polarized && polarized_ref < 0) own_polarized = polarized_initial(model, w, k, 0.0);

  std::optional<StateVector<N>> psi;
  if (cfg.compare_tdse) psi = valence_state(model, k);
  const int dim = model.n_bands();

  std::size_t next_out = 0;
  for (int s = 0;; ++s) {
    const double t = s * tl.dt;
    if (next_out < tl.outputs.size() && tl.outputs[next_out] == s) {
      ++next_out;
      for (const MasterState<N>& st : states) {
        for (BasisKind b : cfg.bases) {
          const BasisSnapshot<N>* snap = &st.frame;
          if (b == BasisKind::Bloch) snap = &bloch;
          if (b == BasisKind::PolarizedHouston)
            snap = polarized_ref >= 0 ? &states[polarized_ref].reference : &*own_polarized;
          tr.values.push_back(
              excited<N>(dim, [&](int band) { return project_population<N>(st, *snap, band, tl.dt); }));
        }
        tr.values.push_back(current<N>(st, model));
        tr.diag.max_trace_drift = std::max(tr.diag.max_trace_drift, std::abs(st.rho.trace().real() - 1.0));
        tr.diag.min_eigenvalue = std::min(tr.diag.min_eigenvalue, min_eigenvalue<N>(st.rho));
      }
      if (psi) {
        for (BasisKind b : cfg.bases) {
          const BasisSnapshot<N>* snap = &states.front().frame;
          if (b == BasisKind::Bloch) snap = &bloch;
          if (b == BasisKind::PolarizedHouston)
            snap = polarized_ref >= 0 ? &states[polarized_ref].reference : &*own_polarized;
          const BandMatrix<N>& u = snap->states;
          tr.values.push_back(excited<N>(dim, [&](int band) { return std::norm(u.col(band).dot(*psi)); }));
        }
        tr.values.push_back(current<N>(*psi, model, w, k, t));
        tr.diag.max_norm_drift = std::max(tr.diag.max_norm_drift, std::abs(psi->norm() - 1.0));
      }
    }
    if (s == tl.n_steps) break;
    const MasterFrames<N> frames = master_frames(states.front().frame, model, w, tl.dt);
    for (MasterState<N>& st : states) {
      st = master_step(st, frames, model, w, cfg.relax, tl.dt);
      tr.diag.max_non_hermiticity = std::max(tr.diag.max_non_hermiticity, st.non_hermiticity);
    }
    if (own_polarized) *own_polarized = polarized_step(*own_polarized, model, w, tl.dt);
    if (psi) *psi = tdse_step<N>(*psi, k, t, tl.dt, model, w);
  }
  return tr;
}

}  // namespace detail

/// Houston-basis master equation on the k-grid that maps onto the SBE grid
/// at time t_cmp, compared element-wise with the SBE density matrices. Each
/// master rho is moved into the SBE gauge with a diagonal phase, which
/// leaves populations and coherence magnitudes untouched.
template <int N>
double sbe_master_difference(const SbeSystem<N>& sbe, const BandModel<N>& model, const Waveform& w,
                             const RelaxationParams& relax, int n_steps, double dt, int threads) {
  const KGrid& g = sbe.grid();
  const double t_cmp = n_steps * dt;
  const KGrid labels(g.n_k, g.a_L, g.offset - w.A_at(t_cmp));
  std::vector<double> diff(g.n_k, 0.0);
  parallel_chunks(g.n_k, threads, [&](int begin, int end) {
    for (int j = begin; j < end; ++j) {
      MasterState<N> st = master_initial(BasisKind::Houston, model, w, labels.point(j), 0.0);
      for (int s = 0; s < n_steps; ++s) st = master_step(st, model, w, relax, dt);
      const BandMatrix<N> overlap = sbe.states(j).adjoint() * st.frame.states;
      const int dim = static_cast<int>(overlap.rows());
      BandMatrix<N> p = BandMatrix<N>::Zero(dim, dim);
      for (int b = 0; b < dim; ++b) p(b, b) = overlap(b, b) / std::abs(overlap(b, b));
      const BandMatrix<N> aligned = p * st.rho * p.adjoint();
      diff[j] = max_abs<N>(aligned - sbe.rho()[j]);
    }
  });
  return *std::max_element(diff.begin(), diff.end());
}

namespace detail {

template <int N>
ObservableSeries sbe_run(const ScenarioConfig& cfg, const BandModel<N>& model, const Waveform& w,
                         const Timeline& tl, const std::vector<std::string>& channels, RunReport& report) {
  SbeSystem<N> sbe(model, KGrid(cfg.n_k, model.lattice_constant()), cfg.relax, cfg.stencil_order);
  const int n_k = cfg.n_k;
  const int dim = model.n_bands();
  std::vector<BandMatrix<N>> velocity(n_k);
  for (int j = 0; j < n_k; ++j)
    velocity[j] = sbe.states(j).adjoint() * model.hamiltonian_derivative_at(sbe.grid().point(j)) * sbe.states(j);

  ObservableSeries series;
  for (const std::string& c : channels) series.add_channel(c);
  std::vector<double> row(channels.size());
  std::size_t next_out = 0;
  for (int s = 0;; ++s) {
    const double t = s * tl.dt;
    if (next_out < tl.outputs.size() && tl.outputs[next_out] == s) {
      ++next_out;
      const double a = w.A_at(t);
      const double e = w.E_at(t);
      std::size_t c = 0;
      row[c++] = a;
      row[c++] = e;
      for (BasisKind b : cfg.bases) {
        double sum = 0.0;
        for (int j = 0; j < n_k; ++j) {
          const BandMatrix<N>& rho = sbe.rho()[j];
          const double kappa = sbe.grid().point(j);
          BandMatrix<N> u;
          if (b == BasisKind::Houston) {
            u = BandMatrix<N>::Identity(dim, dim);
          } else if (b == BasisKind::PolarizedHouston) {
            const EffectiveHamiltonian<N> heff = effective_hamiltonian<N>(
                sbe.states(j), sbe.energies(j), model.hamiltonian_derivative_at(kappa), e);
            u = eigensystem<N>(heff.matrix, {.gauge_sensitive = true}).states;
          } else {
            u = sbe.states(j).adjoint() * eigensystem<N>(model.hamiltonian_at(kappa - a)).states;
          }
          sum += excited<N>(dim, [&](int band) { return std::real(u.col(band).dot(rho * u.col(band))); });
        }
        row[c++] = sum / n_k;
      }
      double j_sum = 0.0;
      for (int j = 0; j < n_k; ++j) {
        j_sum += -std::real((velocity[j] * sbe.rho()[j]).trace());
        report.diagnostics.max_trace_drift =
            std::max(report.diagnostics.max_trace_drift, std::abs(sbe.rho()[j].trace().real() - 1.0));
        report.diagnostics.min_eigenvalue =
            std::min(report.diagnostics.min_eigenvalue, min_eigenvalue<N>(sbe.rho()[j]));
      }
      row[c++] = j_sum / n_k;
      series.append(units::au_to_fs(t), row);
    }
    if (s == tl.n_steps) break;
    sbe.step(w, tl.dt);
  }
  if (cfg.compare_master)
    report.metrics["sbe_master_max_abs_diff"] =
        sbe_master_difference(sbe, model, w, cfg.relax, tl.n_steps, tl.dt, report.threads);
  return series;
}

}  // namespace detail

/// Column names for a config, after t_fs.
inline std::vector<std::string> scenario_channels(const ScenarioConfig& cfg) {
  std::vector<std::string> ch = {"A_au", "E_au"};
  auto block = [&](const std::string& suffix) {
    for (BasisKind b : cfg.bases) ch.push_back(detail::population_channel(b, suffix));
    ch.push_back(detail::suffixed("J_au", suffix));
  };
  switch (cfg.engine) {
    case EngineKind::Tdse:
      block("");
      if (cfg.compare_length) ch.push_back("n_H_length");
      break;
    case EngineKind::Master:
      if (cfg.references.size() == 1) {
        block("");
      } else {
        for (BasisKind r : cfg.references) block(std::string(to_string(r)));
      }
      if (cfg.compare_tdse) block("tdse");
      break;
    case EngineKind::Sbe: block(""); break;
  }
  return ch;
}

/// Runs a scenario on any band model. Writes the CSV and the report sidecar
/// when cfg.output_path is set.
template <int N>
RunResult run_scenario(const ScenarioConfig& cfg, const BandModel<N>& model) {
  const auto start = std::chrono::steady_clock::now();
  cfg.relax.validate();
  const std::unique_ptr<Waveform> w = cfg.waveform();
  const detail::Timeline tl{cfg.n_steps(), cfg.output_steps(), cfg.dt_au};

  RunResult result;
  RunReport& report = result.report;
  report.config = config_echo(cfg);
  report.threads = resolve_threads(cfg.threads);
  report.n_steps = tl.n_steps;
  report.output_path = cfg.output_path;

  const std::vector<std::string> channels = scenario_channels(cfg);
  ObservableSeries& series = result.series;

  if (cfg.engine == EngineKind::Sbe) {
    series = detail::sbe_run(cfg, model, *w, tl, channels, report);
  } else {
    const KGrid grid(cfg.n_k, model.lattice_constant());
    const int n_ch = static_cast<int>(channels.size()) - 2;
    std::vector<detail::KTrace> traces(cfg.n_k);
    parallel_chunks(cfg.n_k, report.threads, [&](int begin, int end) {
      for (int j = begin; j < end; ++j)
        traces[j] = cfg.engine == EngineKind::Tdse ? detail::tdse_trace(cfg, model, *w, grid.point(j), tl, n_ch)
                                                    : detail::master_trace(cfg, model, *w, grid.point(j), tl, n_ch);
    });

    for (const std::string& c : channels) series.add_channel(c);
    std::vector<double> row(channels.size());
    double gauge = 0.0;
    for (const detail::KTrace& tr : traces) {
      report.diagnostics.merge(tr.diag);
      gauge = std::max(gauge, tr.gauge_deviation);
    }
    for (int i = 0; i < tl.n_out(); ++i) {
      const double t = tl.outputs[i] * tl.dt;
      row[0] = w->A_at(t);
      row[1] = w->E_at(t);
      for (int c = 0; c < n_ch; ++c) {
        double sum = 0.0;
        for (const detail::KTrace& tr : traces) sum += tr.values[static_cast<std::size_t>(i * n_ch + c)];
        row[c + 2] = sum / cfg.n_k;
      }
      series.append(units::au_to_fs(t), row);
    }
    if (cfg.compare_length) report.metrics["gauge_max_population_deviation"] = gauge;
  }

  if (report.diagnostics.min_eigenvalue < -1e-6)
    report.warnings.push_back("density matrix eigenvalue " +
                              detail::format_double(report.diagnostics.min_eigenvalue) + " below -1e-6");

  for (const auto& [k, v] : report.config)
    if (k != "run.threads" && k != "output.path") series.metadata[k] = v;
  if (!cfg.preset.empty()) series.metadata["preset"] = cfg.preset;

  const std::string csv = format_csv(series);
  report.digest = sha256_hex(csv);
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!cfg.output_path.empty()) {
    write_text_file(cfg.output_path, csv);
    try {
      write_text_file(cfg.output_path + ".report.txt", report.format());
    } catch (...) {
      std::remove(cfg.output_path.c_str());
      throw;
    }
  }
  return result;
}

/// The shipped model: a dimer chain built from cfg.model.
inline RunResult run_scenario(const ScenarioConfig& cfg) {
  const DimerChain model(cfg.model);
  return run_scenario<2>(cfg, model);
}

}  // namespace dlsim
