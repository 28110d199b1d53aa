#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dlsim/bandmodel.hpp"
#include "dlsim/bases.hpp"
#include "dlsim/dynamics.hpp"
#include "dlsim/errors.hpp"
#include "dlsim/fields.hpp"
#include "dlsim/units.hpp"

namespace dlsim {

enum class FieldKind { None, Static, Pulse };
enum class EngineKind { Tdse, Master, Sbe };

inline std::string_view to_string(FieldKind k) {
  switch (k) {
    case FieldKind::None: return "none";
    case FieldKind::Static: return "static";
    case FieldKind::Pulse: return "pulse";
  }
  return "none";
}

inline std::string_view to_string(EngineKind k) {
  switch (k) {
    case EngineKind::Tdse: return "tdse";
    case EngineKind::Master: return "master";
    case EngineKind::Sbe: return "sbe";
  }
  return "tdse";
}

/// Fully resolved run description. Lab units, as in the config keys.
struct ScenarioConfig {
  std::string preset;

  DimerChainParams model;

  FieldKind field_kind = FieldKind::Static;
  StaticRampParams ramp;
  PulseParams pulse;

  int n_k = 512;
  double dt_au = 0.1;
  double t_end_fs = 60.0;

  double stride_fs = 2.0;
  std::string output_path;

  EngineKind engine = EngineKind::Tdse;
  std::vector<BasisKind> bases{kAllBasisKinds.begin(), kAllBasisKinds.end()};
  bool compare_tdse = false;
  bool compare_length = false;

  RelaxationParams relax;
  std::vector<BasisKind> references{BasisKind::Houston};

  int threads = 0;  // 0: all available cores

  int stencil_order = 4;
  bool compare_master = false;

  std::unique_ptr<Waveform> waveform() const {
    switch (field_kind) {
      case FieldKind::None: return std::make_unique<NoField>();
      case FieldKind::Static: return std::make_unique<StaticRamp>(ramp);
      case FieldKind::Pulse: return std::make_unique<Pulse>(pulse);
    }
    return std::make_unique<NoField>();
  }

  int n_steps() const { return static_cast<int>(std::lround(units::fs_to_au(t_end_fs) / dt_au)); }
  /// Steps at which output rows are taken: the step nearest each multiple
  /// of stride_fs, always including the first and last step.
  std::vector<int> output_steps() const {
    std::vector<int> out;
    const int last = n_steps();
    for (int i = 0;; ++i) {
      const int s = static_cast<int>(std::lround(units::fs_to_au(i * stride_fs) / dt_au));
      if (s >= last) break;
      if (out.empty() || s > out.back()) out.push_back(s);
    }
    out.push_back(last);
    return out;
  }
};

/// One `key = value` with where it came from, for error messages.
struct Assignment {
  std::string key;
  std::string value;
  std::string origin;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Accepted unit spellings per quantity, with the factor into the key's unit.
struct UnitFactor {
  std::string_view name;
  double factor;
};

enum class Quantity { Plain, Energy, Time, TimeAu, Length, FieldVpm, FieldMVcm, Temperature };

inline std::vector<UnitFactor> units_for(Quantity q) {
  switch (q) {
    case Quantity::Plain: return {};
    case Quantity::Energy: return {{"eV", 1.0}, {"meV", 1e-3}, {"Ha", units::hartree_eV}};
    case Quantity::Time: return {{"fs", 1.0}, {"as", 1e-3}, {"ps", 1e3}, {"au", units::time_fs}};
    case Quantity::TimeAu: return {{"au", 1.0}, {"fs", 1.0 / units::time_fs}, {"as", 1e-3 / units::time_fs}};
    case Quantity::Length: return {{"A", 1.0}, {"\xC3\x85", 1.0}, {"nm", 10.0}, {"bohr", units::bohr_angstrom}};
    case Quantity::FieldVpm: return {{"V/m", 1.0}, {"MV/m", 1e6}, {"kV/cm", 1e5}, {"MV/cm", 1e8}};
    case Quantity::FieldMVcm: return {{"MV/cm", 1.0}, {"MV/m", 1e-2}, {"kV/cm", 1e-3}, {"V/m", 1e-8}};
    case Quantity::Temperature: return {{"K", 1.0}};
  }
  return {};
}

// Number with an optional unit suffix; "inf" is accepted where allow_inf.
inline double parse_quantity(const Assignment& a, Quantity q, bool allow_inf = false) {
  const std::string_view text = trim(a.value);
  const auto fail = [&](const std::string& why) -> double {
    throw Error(ErrorCode::UnitParseError, a.origin + ": " + a.key + " = '" + a.value + "': " + why);
  };
  if (allow_inf && (text == "inf" || text == "infinity")) return std::numeric_limits<double>::infinity();
  double v = 0.0;
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || ptr == begin) return fail("not a number");
  const std::string_view suffix = trim(std::string_view(ptr, static_cast<std::size_t>(end - ptr)));
  if (!std::isfinite(v)) return fail("not finite");
  if (suffix.empty()) return v;
  for (const UnitFactor& u : units_for(q))
    if (u.name == suffix) return v * u.factor;
  return fail("unknown unit '" + std::string(suffix) + "'");
}

inline int parse_int(const Assignment& a) {
  const std::string_view text = trim(a.value);
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw Error(ErrorCode::UnitParseError, a.origin + ": " + a.key + " = '" + a.value + "': not an integer");
  return v;
}

inline bool parse_bool(const Assignment& a) {
  const std::string_view t = trim(a.value);
  if (t == "true" || t == "yes" || t == "1" || t == "on") return true;
  if (t == "false" || t == "no" || t == "0" || t == "off") return false;
  throw Error(ErrorCode::UnitParseError, a.origin + ": " + a.key + " = '" + a.value + "': not a boolean");
}

inline std::vector<BasisKind> parse_basis_list(const Assignment& a) {
  std::vector<BasisKind> out;
  std::string_view rest = a.value;
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view item = trim(rest.substr(0, comma));
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    if (item.empty()) continue;
    const auto kind = parse_basis_kind(item);
    if (!kind)
      throw Error(ErrorCode::UnitParseError,
                  a.origin + ": " + a.key + ": unknown basis '" + std::string(item) + "' (bloch|houston|polarized)");
    if (std::find(out.begin(), out.end(), *kind) == out.end()) out.push_back(*kind);
  }
  if (out.empty()) throw Error(ErrorCode::UnitParseError, a.origin + ": " + a.key + ": empty basis list");
  return out;
}

inline std::string format_basis_list(const std::vector<BasisKind>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += to_string(v[i]);
  }
  return s;
}

inline void require(bool ok, const Assignment& a, const char* what) {
  if (!ok) throw Error(ErrorCode::UnitParseError, a.origin + ": " + a.key + " = '" + a.value + "': " + what);
}

struct KeySpec {
  std::string_view key;
  std::function<void(ScenarioConfig&, const Assignment&)> set;
  std::function<std::string(const ScenarioConfig&)> get;
};

inline double positive(const Assignment& a, Quantity q, bool allow_inf = false) {
  const double v = parse_quantity(a, q, allow_inf);
  require(v > 0.0, a, "must be positive");
  return v;
}

inline const std::vector<KeySpec>& key_table() {
  using C = ScenarioConfig;
  using A = Assignment;
  static const std::vector<KeySpec> table = {
      {"model.a_L_A", [](C& c, const A& a) { c.model.a_L_angstrom = positive(a, Quantity::Length); },
       [](const C& c) { return format_double(c.model.a_L_angstrom); }},
      {"model.delta_eV",
       [](C& c, const A& a) {
         c.model.delta_eV = parse_quantity(a, Quantity::Energy);
         require(c.model.delta_eV >= 0.0, a, "must be non-negative");
       },
       [](const C& c) { return format_double(c.model.delta_eV); }},
      {"model.tH_eV", [](C& c, const A& a) { c.model.t_H_eV = positive(a, Quantity::Energy); },
       [](const C& c) { return format_double(c.model.t_H_eV); }},
      {"field.kind",
       [](C& c, const A& a) {
         const std::string_view v = trim(a.value);
         if (v == "static") c.field_kind = FieldKind::Static;
         else if (v == "pulse") c.field_kind = FieldKind::Pulse;
         else if (v == "none") c.field_kind = FieldKind::None;
         else require(false, a, "expected static|pulse|none");
       },
       [](const C& c) { return std::string(to_string(c.field_kind)); }},
      {"field.E0_MVcm", [](C& c, const A& a) { c.pulse.E0_MV_per_cm = parse_quantity(a, Quantity::FieldMVcm); },
       [](const C& c) { return format_double(c.pulse.E0_MV_per_cm); }},
      {"field.omega0_eV", [](C& c, const A& a) { c.pulse.omega0_eV = positive(a, Quantity::Energy); },
       [](const C& c) { return format_double(c.pulse.omega0_eV); }},
      {"field.Tpulse_fs", [](C& c, const A& a) { c.pulse.T_pulse_fs = positive(a, Quantity::Time); },
       [](const C& c) { return format_double(c.pulse.T_pulse_fs); }},
      {"field.Edc_Vpm", [](C& c, const A& a) { c.ramp.E_dc_V_per_m = parse_quantity(a, Quantity::FieldVpm); },
       [](const C& c) { return format_double(c.ramp.E_dc_V_per_m); }},
      {"field.Tdc_fs", [](C& c, const A& a) { c.ramp.T_dc_fs = positive(a, Quantity::Time); },
       [](const C& c) { return format_double(c.ramp.T_dc_fs); }},
      {"grid.Nk",
       [](C& c, const A& a) {
         c.n_k = parse_int(a);
         require(c.n_k >= 2, a, "needs at least 2 points");
       },
       [](const C& c) { return std::to_string(c.n_k); }},
      {"grid.dt_au", [](C& c, const A& a) { c.dt_au = positive(a, Quantity::TimeAu); },
       [](const C& c) { return format_double(c.dt_au); }},
      {"grid.t_end_fs", [](C& c, const A& a) { c.t_end_fs = positive(a, Quantity::Time); },
       [](const C& c) { return format_double(c.t_end_fs); }},
      {"output.stride_fs", [](C& c, const A& a) { c.stride_fs = positive(a, Quantity::Time); },
       [](const C& c) { return format_double(c.stride_fs); }},
      {"output.path", [](C& c, const A& a) { c.output_path = std::string(trim(a.value)); },
       [](const C& c) { return c.output_path; }},
      {"engine.kind",
       [](C& c, const A& a) {
         const std::string_view v = trim(a.value);
         if (v == "tdse") c.engine = EngineKind::Tdse;
         else if (v == "master") c.engine = EngineKind::Master;
         else if (v == "sbe") c.engine = EngineKind::Sbe;
         else require(false, a, "expected tdse|master|sbe");
       },
       [](const C& c) { return std::string(to_string(c.engine)); }},
      {"engine.bases", [](C& c, const A& a) { c.bases = parse_basis_list(a); },
       [](const C& c) { return format_basis_list(c.bases); }},
      {"engine.compare_tdse", [](C& c, const A& a) { c.compare_tdse = parse_bool(a); },
       [](const C& c) { return std::string(c.compare_tdse ? "true" : "false"); }},
      {"engine.compare_length", [](C& c, const A& a) { c.compare_length = parse_bool(a); },
       [](const C& c) { return std::string(c.compare_length ? "true" : "false"); }},
      {"relax.T1_fs", [](C& c, const A& a) { c.relax.T1_fs = positive(a, Quantity::Time, true); },
       [](const C& c) { return format_double(c.relax.T1_fs); }},
      {"relax.T2_fs", [](C& c, const A& a) { c.relax.T2_fs = positive(a, Quantity::Time, true); },
       [](const C& c) { return format_double(c.relax.T2_fs); }},
      {"relax.mu_eV", [](C& c, const A& a) { c.relax.mu_eV = parse_quantity(a, Quantity::Energy); },
       [](const C& c) { return format_double(c.relax.mu_eV); }},
      {"relax.Te_K",
       [](C& c, const A& a) {
         c.relax.Te_K = parse_quantity(a, Quantity::Temperature);
         require(c.relax.Te_K >= 0.0, a, "must be non-negative");
       },
       [](const C& c) { return format_double(c.relax.Te_K); }},
      {"relax.reference", [](C& c, const A& a) { c.references = parse_basis_list(a); },
       [](const C& c) { return format_basis_list(c.references); }},
      {"run.threads",
       [](C& c, const A& a) {
         c.threads = parse_int(a);
         require(c.threads >= 0, a, "must be non-negative (0 = all cores)");
       },
       [](const C& c) { return std::to_string(c.threads); }},
      {"sbe.stencil_order",
       [](C& c, const A& a) {
         c.stencil_order = parse_int(a);
         require(c.stencil_order == 2 || c.stencil_order == 4 || c.stencil_order == 6, a, "expected 2, 4 or 6");
       },
       [](const C& c) { return std::to_string(c.stencil_order); }},
      {"sbe.compare_master", [](C& c, const A& a) { c.compare_master = parse_bool(a); },
       [](const C& c) { return std::string(c.compare_master ? "true" : "false"); }},
  };
  return table;
}

inline const KeySpec* find_key(std::string_view key) {
  for (const KeySpec& k : key_table())
    if (k.key == key) return &k;
  return nullptr;
}

}  // namespace detail

/// Splits config text into assignments. `[section]` headers prefix the keys
/// that follow; a key containing a dot is taken as fully qualified. `#` and
/// `;` start comments.
inline std::vector<Assignment> parse_assignments(std::string_view text, std::string_view source) {
  std::vector<Assignment> out;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    const std::string origin = std::string(source) + " line " + std::to_string(line_no);

    const auto hash = line.find_first_of("#;");
    if (hash != std::string_view::npos) line = line.substr(0, hash);
    line = detail::trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']' || line.size() < 3)
        throw Error(ErrorCode::UnitParseError, origin + ": malformed section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::UnitParseError, origin + ": expected key = value");
    std::string key(detail::trim(line.substr(0, eq)));
    const std::string value(detail::trim(line.substr(eq + 1)));
    if (key.empty()) throw Error(ErrorCode::UnitParseError, origin + ": empty key");
    if (key.find('.') == std::string::npos && !section.empty()) key = section + "." + key;
    out.push_back({key, value, origin});
  }
  return out;
}

/// `key=value` from the command line.
inline Assignment parse_override(std::string_view item, int index) {
  const std::string origin = "--set #" + std::to_string(index);
  const auto eq = item.find('=');
  if (eq == std::string_view::npos)
    throw Error(ErrorCode::UnitParseError, origin + ": expected key=value, got '" + std::string(item) + "'");
  return {std::string(detail::trim(item.substr(0, eq))), std::string(detail::trim(item.substr(eq + 1))), origin};
}

// ---------------------------------------------------------------------------
// Presets. Each is plain config text applied before the user's file and
// overrides.

struct PresetInfo {
  std::string_view name;
  std::string_view summary;
  std::string_view text;
};

inline const std::array<PresetInfo, 8>& presets() {
  static const std::array<PresetInfo, 8> table = {{
      {"fig1_static", "static ramp, E_dc = 1 V/m, T_dc = 20 fs; TDSE projected on all three bases",
       "[field]\nkind = static\nEdc_Vpm = 1\nTdc_fs = 20\n"
       "[grid]\nt_end_fs = 60\n"
       "[engine]\nkind = tdse\nbases = bloch,houston,polarized\n"},
      {"fig2_offres_weak", "off-resonant pulse, omega0 = 0.1 eV, E0 = 1 MV/cm, 100 fs",
       "[field]\nkind = pulse\nE0_MVcm = 1\nomega0_eV = 0.1\nTpulse_fs = 100\n"
       "[grid]\nt_end_fs = 120\n"
       "[output]\nstride_fs = 0.5\n"
       "[engine]\nkind = tdse\nbases = bloch,houston,polarized\n"},
      {"fig3_offres_strong",
       "off-resonant pulse, omega0 = 0.1 eV, 100 fs; field.E0_MVcm must be set "
       "(4 for the MV/cm reading, 0.04 for 4 MV/m)",
       "# The amplitude is deliberately left unset. Two readings of the source value:\n"
       "#   field.E0_MVcm = 4        (4 MV/cm, stronger than the weak case)\n"
       "#   field.E0_MVcm = 4 MV/m   (0.04 MV/cm, weaker than the weak case)\n"
       "[field]\nkind = pulse\nomega0_eV = 0.1\nTpulse_fs = 100\n"
       "[grid]\nt_end_fs = 120\n"
       "[output]\nstride_fs = 0.5\n"
       "[engine]\nkind = tdse\nbases = bloch,houston,polarized\n"},
      {"fig4_resonant", "resonant pulse, omega0 = 1.55 eV, E0 = 0.01 MV/cm, 100 fs",
       "[field]\nkind = pulse\nE0_MVcm = 0.01\nomega0_eV = 1.55\nTpulse_fs = 100\n"
       "[grid]\nt_end_fs = 120\n"
       "[output]\nstride_fs = 0.5\n"
       "[engine]\nkind = tdse\nbases = bloch,houston,polarized\n"},
      {"fig5_current", "static ramp; master equation relaxing to each basis, T1 = T2 = 20 fs, plus TDSE current",
       "[field]\nkind = static\nEdc_Vpm = 1\nTdc_fs = 20\n"
       "[grid]\nt_end_fs = 60\n"
       "[output]\nstride_fs = 0.5\n"
       "[engine]\nkind = master\nbases = bloch,houston,polarized\ncompare_tdse = true\n"
       "[relax]\nT1_fs = 20\nT2_fs = 20\nmu_eV = 0\nTe_K = 0\nreference = bloch,houston,polarized\n"},
      {"validate_gauge", "velocity- vs length-gauge Houston populations over the fig2 pulse, 16 k-points",
       "[field]\nkind = pulse\nE0_MVcm = 1\nomega0_eV = 0.1\nTpulse_fs = 100\n"
       "[grid]\nNk = 16\ndt_au = 0.05\nt_end_fs = 120\n"
       "[engine]\nkind = tdse\nbases = houston,polarized\ncompare_length = true\n"},
      {"validate_sbe", "Houston-basis master equation vs semiconductor Bloch equations, static ramp to 40 fs",
       "[field]\nkind = static\nEdc_Vpm = 1\nTdc_fs = 20\n"
       "[grid]\nNk = 512\nt_end_fs = 40\n"
       "[engine]\nkind = sbe\nbases = bloch,houston,polarized\n"
       "[relax]\nT1_fs = 20\nT2_fs = 20\n"
       "[sbe]\nstencil_order = 4\ncompare_master = true\n"},
      {"validate_adiabatic", "static ramp; polarized-Houston projections after the ramp (halved field, doubled rise)",
       "[field]\nkind = static\nEdc_Vpm = 1\nTdc_fs = 20\n"
       "[grid]\nt_end_fs = 80\n"
       "[engine]\nkind = tdse\nbases = houston,polarized\n"},
  }};
  return table;
}

inline const PresetInfo& find_preset(std::string_view name) {
  for (const PresetInfo& p : presets())
    if (p.name == name) return p;
  throw Error(ErrorCode::UnknownPreset, "no preset named '" + std::string(name) + "'");
}

/// Applies assignments in order on top of the defaults and checks the
/// result. Later assignments win.
inline ScenarioConfig build_config(const std::vector<Assignment>& assignments, std::string preset_name = {}) {
  ScenarioConfig cfg;
  cfg.preset = std::move(preset_name);
  std::set<std::string> assigned;
  for (const Assignment& a : assignments) {
    const detail::KeySpec* spec = detail::find_key(a.key);
    if (!spec) throw Error(ErrorCode::UnknownKey, a.origin + ": unknown key '" + a.key + "'");
    if (a.value.empty() && a.key != "output.path")
      throw Error(ErrorCode::MissingRequired, a.origin + ": " + a.key + " has no value");
    spec->set(cfg, a);
    assigned.insert(a.key);
  }

  const std::string where = cfg.preset.empty() ? std::string("config") : "preset " + cfg.preset;
  if (cfg.field_kind == FieldKind::Pulse && !assigned.count("field.E0_MVcm"))
    throw Error(ErrorCode::MissingRequired, where + ": field.E0_MVcm is required for a pulse");
  if (cfg.field_kind == FieldKind::Pulse && cfg.t_end_fs < cfg.pulse.T_pulse_fs)
    throw Error(ErrorCode::InvalidArgument, where + ": grid.t_end_fs ends before the pulse");
  if (cfg.field_kind == FieldKind::Static && cfg.t_end_fs < cfg.ramp.T_dc_fs)
    throw Error(ErrorCode::InvalidArgument, where + ": grid.t_end_fs ends before the ramp");
  if (cfg.n_steps() < 1) throw Error(ErrorCode::InvalidArgument, where + ": run shorter than one step");
  if (cfg.compare_length && cfg.engine != EngineKind::Tdse)
    throw Error(ErrorCode::InvalidArgument, where + ": engine.compare_length needs engine.kind = tdse");
  if (cfg.compare_master && cfg.engine != EngineKind::Sbe)
    throw Error(ErrorCode::InvalidArgument, where + ": sbe.compare_master needs engine.kind = sbe");
  if (cfg.engine == EngineKind::Sbe && cfg.references != std::vector<BasisKind>{BasisKind::Houston})
    throw Error(ErrorCode::InvalidArgument, where + ": the sbe engine relaxes toward Houston states only");
  return cfg;
}

/// Resolves preset text, then the config file text, then overrides.
inline ScenarioConfig load_config(std::string_view preset_name, std::string_view text, std::string_view source,
                                  const std::vector<Assignment>& overrides = {}) {
  std::vector<Assignment> all;
  if (!preset_name.empty()) {
    const PresetInfo& p = find_preset(preset_name);
    all = parse_assignments(p.text, "preset " + std::string(p.name));
  }
  for (Assignment& a : parse_assignments(text, source)) all.push_back(std::move(a));
  for (const Assignment& a : overrides) all.push_back(a);
  return build_config(all, std::string(preset_name));
}

/// Config text on its own, optionally on top of a preset.
inline ScenarioConfig parse_config(std::string_view text, std::string_view preset_name = {}) {
  return load_config(preset_name, text, "config");
}

/// key = value lines for every key, in table order.
inline std::vector<std::pair<std::string, std::string>> config_echo(const ScenarioConfig& cfg) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const detail::KeySpec& k : detail::key_table()) out.emplace_back(std::string(k.key), k.get(cfg));
  return out;
}

inline std::vector<std::string_view> config_keys() {
  std::vector<std::string_view> out;
  for (const detail::KeySpec& k : detail::key_table()) out.push_back(k.key);
  return out;
}

}  // namespace dlsim
