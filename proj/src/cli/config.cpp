#include "abqed/cli/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

namespace abqed::cli {

std::string to_string(PresetName p) {
  switch (p) {
    case PresetName::magnetic: return "magnetic";
    case PresetName::electric: return "electric";
    case PresetName::electrodynamic: return "electrodynamic";
  }
  return "unknown";
}

std::optional<PresetName> preset_from_string(const std::string& name) {
  for (auto p : {PresetName::magnetic, PresetName::electric, PresetName::electrodynamic})
    if (to_string(p) == name) return p;
  return std::nullopt;
}

std::optional<UnitSystem> units_from_string(const std::string& name) {
  if (name == "si") return UnitSystem::si;
  if (name == "reduced") return UnitSystem::reduced;
  return std::nullopt;
}

std::string to_string(UnitSystem u) { return u == UnitSystem::si ? "si" : "reduced"; }

PresetParameters PresetParameters::defaults(UnitSystem u) {
  return {MagneticPresetParams::defaults(u), ElectricPresetParams::defaults(u),
          ElectrodynamicPresetParams::defaults(u)};
}

// ---------------------------------------------------------------------------
// Preset parameter table

namespace {

std::string format_number(double x) {
  std::ostringstream s;
  s.precision(17);
  s << x;
  return s.str();
}

std::optional<double> parse_double(const std::string& text) {
  if (text.empty()) return std::nullopt;
  char* end = nullptr;
  const double x = std::strtod(text.c_str(), &end);
  if (end != text.c_str() + text.size() || !std::isfinite(x)) return std::nullopt;
  return x;
}

std::optional<long> parse_int(const std::string& text) {
  if (text.empty()) return std::nullopt;
  char* end = nullptr;
  const long x = std::strtol(text.c_str(), &end, 10);
  if (end != text.c_str() + text.size()) return std::nullopt;
  return x;
}

std::optional<bool> parse_bool(const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  return std::nullopt;
}

using M = PresetName;

struct Entry {
  ParameterInfo info;
  std::function<bool(PresetParameters&, PresetName, const std::string&)> set;
  std::function<std::string(const PresetParameters&, PresetName)> get;
};

// Field of the selected preset; null members mark presets without it.
template <typename T>
T* pick(PresetParameters& p, PresetName n, T MagneticPresetParams::*m,
        T ElectricPresetParams::*e, T ElectrodynamicPresetParams::*d) {
  switch (n) {
    case M::magnetic: return m ? &(p.magnetic.*m) : nullptr;
    case M::electric: return e ? &(p.electric.*e) : nullptr;
    case M::electrodynamic: return d ? &(p.electrodynamic.*d) : nullptr;
  }
  return nullptr;
}

using Getter = std::function<double*(PresetParameters&, PresetName)>;

Entry number_entry(std::string name, std::string help, std::vector<PresetName> presets,
                   Getter field) {
  Entry e;
  e.info = {std::move(name), "double", std::move(help), std::move(presets)};
  e.set = [field](PresetParameters& p, PresetName n, const std::string& v) {
    auto x = parse_double(v);
    if (!x) return false;
    *field(p, n) = *x;
    return true;
  };
  e.get = [field](const PresetParameters& p, PresetName n) {
    return format_number(*field(const_cast<PresetParameters&>(p), n));
  };
  return e;
}

Getter solenoid_field(double SolenoidParams::*f) {
  return [f](PresetParameters& p, PresetName n) -> double* {
    return n == M::magnetic ? &(p.magnetic.solenoid.*f) : &(p.electrodynamic.solenoid.*f);
  };
}

std::vector<Entry> build_table() {
  const std::vector<PresetName> all{M::magnetic, M::electric, M::electrodynamic};
  const std::vector<PresetName> solenoid{M::magnetic, M::electrodynamic};
  const std::vector<PresetName> cages{M::electric, M::electrodynamic};
  std::vector<Entry> t;

  t.push_back(number_entry("flux", "solenoid flux [Wb]", solenoid,
                           [](PresetParameters& p, PresetName n) {
                             return pick<double>(p, n, &MagneticPresetParams::flux, nullptr,
                                                 &ElectrodynamicPresetParams::flux);
                           }));
  t.push_back(number_entry("solenoid_radius", "solenoid radius [m]", solenoid,
                           solenoid_field(&SolenoidParams::radius)));
  t.push_back(number_entry("turns_per_meter", "solenoid winding density [1/m]", solenoid,
                           solenoid_field(&SolenoidParams::turns_per_meter)));
  t.push_back(number_entry("length_ratio", "finite solenoid length / radius", solenoid,
                           solenoid_field(&SolenoidParams::length_ratio)));
  {
    Entry e;
    e.info = {"finite", "bool", "use a finite solenoid of stacked loops", solenoid};
    e.set = [](PresetParameters& p, PresetName n, const std::string& v) {
      auto b = parse_bool(v);
      if (!b) return false;
      (n == M::magnetic ? p.magnetic.solenoid : p.electrodynamic.solenoid).finite = *b;
      return true;
    };
    e.get = [](const PresetParameters& p, PresetName n) {
      return std::string((n == M::magnetic ? p.magnetic.solenoid : p.electrodynamic.solenoid)
                                 .finite
                             ? "true"
                             : "false");
    };
    t.push_back(e);
  }
  for (auto [name, member, help] :
       {std::tuple{"loops", &SolenoidParams::loops, "finite solenoid loop count"},
        std::tuple{"segments", &SolenoidParams::segments, "segments per loop"}}) {
    Entry e;
    e.info = {name, "int", help, solenoid};
    e.set = [member](PresetParameters& p, PresetName n, const std::string& v) {
      auto x = parse_int(v);
      if (!x) return false;
      (n == M::magnetic ? p.magnetic.solenoid : p.electrodynamic.solenoid).*member =
          static_cast<int>(*x);
      return true;
    };
    e.get = [member](const PresetParameters& p, PresetName n) {
      return std::to_string(
          (n == M::magnetic ? p.magnetic.solenoid : p.electrodynamic.solenoid).*member);
    };
    t.push_back(e);
  }
  t.push_back(number_entry("half_width", "half width of the path rectangle [m]", all,
                           [](PresetParameters& p, PresetName n) {
                             return pick<double>(p, n, &MagneticPresetParams::half_width,
                                                 &ElectricPresetParams::half_width,
                                                 &ElectrodynamicPresetParams::half_width);
                           }));
  t.push_back(number_entry("half_height", "half height of the path rectangle [m]", all,
                           [](PresetParameters& p, PresetName n) {
                             return pick<double>(p, n, &MagneticPresetParams::half_height,
                                                 &ElectricPresetParams::half_height,
                                                 &ElectrodynamicPresetParams::half_height);
                           }));
  t.push_back(number_entry("duration", "time to traverse each path [s]", {M::magnetic},
                           [](PresetParameters& p, PresetName) { return &p.magnetic.duration; }));
  {
    Entry e;
    e.info = {"velocity", "stop_at_waypoints|catmull_rom", "knot velocity rule",
              {M::magnetic}};
    e.set = [](PresetParameters& p, PresetName, const std::string& v) {
      if (v == "stop_at_waypoints") p.magnetic.velocity = VelocityRule::stop_at_waypoints;
      else if (v == "catmull_rom") p.magnetic.velocity = VelocityRule::catmull_rom;
      else return false;
      return true;
    };
    e.get = [](const PresetParameters& p, PresetName) {
      return std::string(p.magnetic.velocity == VelocityRule::catmull_rom
                             ? "catmull_rom"
                             : "stop_at_waypoints");
    };
    t.push_back(e);
  }
  auto electric = [](double ElectricPresetParams::*f) {
    return [f](PresetParameters& p, PresetName) { return &(p.electric.*f); };
  };
  t.push_back(number_entry("V_a", "cage a potential during the pulse [V]", {M::electric},
                           electric(&ElectricPresetParams::V_a)));
  t.push_back(number_entry("V_b", "cage b potential during the pulse [V]", {M::electric},
                           electric(&ElectricPresetParams::V_b)));
  t.push_back(number_entry("pulse_start", "start of the potential rise [s]", {M::electric},
                           electric(&ElectricPresetParams::pulse_start)));
  t.push_back(number_entry("pulse_end", "end of the potential fall [s]", {M::electric},
                           electric(&ElectricPresetParams::pulse_end)));
  t.push_back(number_entry("ramp_time", "rise and fall time of the pulse [s]", {M::electric},
                           electric(&ElectricPresetParams::ramp_time)));
  t.push_back(number_entry("cage_radius", "cage shell radius [m]", cages,
                           [](PresetParameters& p, PresetName n) {
                             return pick<double>(p, n, nullptr,
                                                 &ElectricPresetParams::cage_radius,
                                                 &ElectrodynamicPresetParams::cage_radius);
                           }));
  t.push_back(number_entry("leg_time", "duration of each transit leg [s]", cages,
                           [](PresetParameters& p, PresetName n) {
                             return n == M::electric ? &p.electric.timeline.leg_time
                                                     : &p.electrodynamic.timeline.leg_time;
                           }));
  t.push_back(number_entry("dwell_time", "time spent inside the cages [s]", cages,
                           [](PresetParameters& p, PresetName n) {
                             return n == M::electric ? &p.electric.timeline.dwell_time
                                                     : &p.electrodynamic.timeline.dwell_time;
                           }));
  auto dyn = [](double ElectrodynamicPresetParams::*f) {
    return [f](PresetParameters& p, PresetName) { return &(p.electrodynamic.*f); };
  };
  t.push_back(number_entry("ramp_start", "start of the flux ramp [s]", {M::electrodynamic},
                           dyn(&ElectrodynamicPresetParams::ramp_start)));
  t.push_back(number_entry("ramp_end", "end of the flux ramp [s]", {M::electrodynamic},
                           dyn(&ElectrodynamicPresetParams::ramp_end)));
  t.push_back(number_entry("final_fraction", "flux after the ramp / flux before",
                           {M::electrodynamic},
                           dyn(&ElectrodynamicPresetParams::final_fraction)));
  t.push_back(number_entry("cage_charge_a", "induced charge on cage a [C]",
                           {M::electrodynamic},
                           dyn(&ElectrodynamicPresetParams::cage_charge_a)));
  t.push_back(number_entry("cage_charge_b", "induced charge on cage b [C]",
                           {M::electrodynamic},
                           dyn(&ElectrodynamicPresetParams::cage_charge_b)));
  {
    Entry e;
    e.info = {"smooth_ramp", "bool", "smoothstep (true) or linear (false) flux ramp",
              {M::electrodynamic}};
    e.set = [](PresetParameters& p, PresetName, const std::string& v) {
      auto b = parse_bool(v);
      if (!b) return false;
      p.electrodynamic.smooth_ramp = *b;
      return true;
    };
    e.get = [](const PresetParameters& p, PresetName) {
      return std::string(p.electrodynamic.smooth_ramp ? "true" : "false");
    };
    t.push_back(e);
  }
  return t;
}

const std::vector<Entry>& table() {
  static const std::vector<Entry> t = build_table();
  return t;
}

const Entry* find_entry(const std::string& name) {
  for (const auto& e : table())
    if (e.info.name == name) return &e;
  return nullptr;
}

bool applies(const ParameterInfo& info, PresetName p) {
  return std::find(info.presets.begin(), info.presets.end(), p) != info.presets.end();
}

}  // namespace

const std::vector<ParameterInfo>& preset_parameters() {
  static const std::vector<ParameterInfo> infos = [] {
    std::vector<ParameterInfo> v;
    for (const auto& e : table()) v.push_back(e.info);
    return v;
  }();
  return infos;
}

void set_preset_parameter(PresetParameters& params, PresetName preset,
                          const std::string& name, const std::string& value,
                          const std::string& origin) {
  const Entry* e = find_entry(name);
  if (!e) throw ConfigParseError(origin + ": unknown preset parameter '" + name + "'");
  if (!applies(e->info, preset))
    throw ConfigParseError(origin + ": parameter '" + name + "' does not apply to preset " +
                           to_string(preset));
  if (!e->set(params, preset, value))
    throw ConfigParseError(origin + ": parameter '" + name + "' expects " + e->info.type +
                           ", got '" + value + "'");
}

std::string preset_parameter_value(const PresetParameters& params, PresetName preset,
                                   const std::string& name) {
  const Entry* e = find_entry(name);
  if (!e || !applies(e->info, preset)) return {};
  return e->get(params, preset);
}

// ---------------------------------------------------------------------------
// Resolution

PresetParameters RunConfiguration::resolved_presets() const {
  auto p = PresetParameters::defaults(units);
  const Particle q = resolved_particle();
  p.magnetic.particle = p.electric.particle = p.electrodynamic.particle = q;
  p.magnetic.numerics = p.electric.numerics = p.electrodynamic.numerics = numerics.phase;
  p.magnetic.quadrature = p.electric.quadrature = p.electrodynamic.quadrature =
      numerics.quadrature;
  const PresetName target = preset.value_or(PresetName::magnetic);
  for (const auto& o : overrides) set_preset_parameter(p, target, o.name, o.value, o.origin);
  return p;
}

GaugeFunction RunConfiguration::build_gauge(const SourceConfiguration& field) const {
  std::vector<GaugeTerm> terms = gauge_terms;
  for (const auto& m : mode_gauge_terms) {
    auto src = std::make_shared<ModeGaugeSource>();
    const ModeGaugeTermSpec spec = m;
    src->spec.f = [spec](int sigma, const Vec3& k, double t) -> cplx {
      if (sigma != spec.sigma) return 0.0;
      return spec.amplitude * std::exp(-0.5 * k.squaredNorm() * spec.width * spec.width) *
             std::cos(spec.omega * t);
    };
    src->spec.df_dt = [spec](int sigma, const Vec3& k, double t) -> cplx {
      if (sigma != spec.sigma) return 0.0;
      return -spec.amplitude * spec.omega *
             std::exp(-0.5 * k.squaredNorm() * spec.width * spec.width) *
             std::sin(spec.omega * t);
    };
    src->config = field;
    src->settings = numerics.kspace;
    GaugeTerm t;
    t.kind = GaugeKind::from_modes;
    t.modes = src;
    terms.push_back(t);
  }
  if (terms.empty()) return GaugeFunction::identity();
  return GaugeFunction(std::move(terms), gauge_label);
}

InterferometerScenario RunConfiguration::build_scenario() const {
  InterferometerScenario s;
  if (scenario) {
    if (sources.empty())
      throw ConfigParseError(origin + ": a custom scenario needs a 'sources' list");
    const auto k = constants();
    s.name = "custom";
    s.field = std::make_shared<FieldModel>(SourceConfiguration(sources, k), numerics.quadrature);
    s.path_a = ParticlePath(scenario->path_a, resolved_particle(), scenario->velocity);
    s.path_b = ParticlePath(scenario->path_b, resolved_particle(), scenario->velocity);
    s.numerics = numerics.phase;
    s.open_mode = scenario->open;
  } else {
    if (!preset) throw ConfigParseError(origin + ": no preset or scenario configured");
    const auto p = resolved_presets();
    switch (*preset) {
      case PresetName::magnetic: s = build_magnetic_preset(p.magnetic); break;
      case PresetName::electric: s = build_electric_preset(p.electric); break;
      case PresetName::electrodynamic: s = build_electrodynamic_preset(p.electrodynamic); break;
    }
  }
  s.gauge = build_gauge(s.field->config());
  s.validate();
  return s;
}

SourceConfiguration RunConfiguration::source_configuration() const {
  if (!sources.empty()) {
    SourceConfiguration c(sources, constants());
    c.validate();
    return c;
  }
  if (!has_scenario())
    throw ConfigParseError(origin + ": no sources, preset or scenario configured");
  return build_scenario().field->config();
}

// ---------------------------------------------------------------------------
// YAML reader

namespace {

class Reader {
 public:
  explicit Reader(std::string origin) : origin_(std::move(origin)) {}

  std::string where(const YAML::Node& n) const {
    const auto m = n.Mark();
    if (m.is_null()) return origin_;
    return origin_ + ":" + std::to_string(m.line + 1) + ":" + std::to_string(m.column + 1);
  }

  [[noreturn]] void fail(const YAML::Node& n, const std::string& path,
                         const std::string& what) const {
    throw ConfigParseError(where(n) + ": key '" + path + "': " + what);
  }

  void require_map(const YAML::Node& n, const std::string& path) const {
    if (!n.IsMap()) fail(n, path, "expected a mapping");
  }

  void check_keys(const YAML::Node& n, const std::string& path,
                  std::initializer_list<const char*> allowed) const {
    require_map(n, path);
    for (auto it = n.begin(); it != n.end(); ++it) {
      const std::string key = it->first.as<std::string>();
      bool ok = false;
      for (const char* a : allowed) ok = ok || key == a;
      if (!ok) {
        std::string list;
        for (const char* a : allowed) list += std::string(list.empty() ? "" : ", ") + a;
        fail(it->first, join(path, key), "unknown key (allowed: " + list + ")");
      }
    }
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  std::string text(const YAML::Node& n, const std::string& path) const {
    if (!n.IsScalar()) fail(n, path, "expected a scalar");
    return n.Scalar();
  }

  double number(const YAML::Node& n, const std::string& path) const {
    auto x = parse_double(text(n, path));
    if (!x) fail(n, path, "expected a finite number, got '" + n.Scalar() + "'");
    return *x;
  }

  long integer(const YAML::Node& n, const std::string& path) const {
    auto x = parse_int(text(n, path));
    if (!x) fail(n, path, "expected an integer, got '" + n.Scalar() + "'");
    return *x;
  }

  bool boolean(const YAML::Node& n, const std::string& path) const {
    auto x = parse_bool(text(n, path));
    if (!x) fail(n, path, "expected true or false, got '" + n.Scalar() + "'");
    return *x;
  }

  Vec3 vec3(const YAML::Node& n, const std::string& path) const {
    if (!n.IsSequence() || n.size() != 3) fail(n, path, "expected a list of 3 numbers");
    return {number(n[0], path + "[0]"), number(n[1], path + "[1]"), number(n[2], path + "[2]")};
  }

  // Visits every key of a map with its path.
  template <typename F>
  void each(const YAML::Node& n, const std::string& path, F&& f) const {
    for (auto it = n.begin(); it != n.end(); ++it)
      f(it->first.as<std::string>(), it->second, join(path, it->first.as<std::string>()));
  }

  const std::string& origin() const { return origin_; }

 private:
  std::string origin_;
};

TimeSchedule read_schedule(const Reader& rd, const YAML::Node& n, const std::string& path) {
  rd.check_keys(n, path, {"kind", "t_start", "t_end", "initial", "final", "amplitude"});
  TimeSchedule s;
  std::string kind = "constant";
  if (n["kind"]) kind = rd.text(n["kind"], path + ".kind");
  if (kind == "constant") {
    s = TimeSchedule::constant(n["amplitude"] ? rd.number(n["amplitude"], path + ".amplitude")
                                              : 1.0);
    return s;
  }
  if (kind == "linear_ramp") s.kind = ScheduleKind::linear_ramp;
  else if (kind == "smoothstep_ramp") s.kind = ScheduleKind::smoothstep_ramp;
  else rd.fail(n["kind"], path + ".kind", "unknown schedule kind '" + kind + "'");
  for (const char* k : {"t_start", "t_end"})
    if (!n[k]) rd.fail(n, path, std::string("ramp schedule needs '") + k + "'");
  s.t_start = rd.number(n["t_start"], path + ".t_start");
  s.t_end = rd.number(n["t_end"], path + ".t_end");
  s.initial = n["initial"] ? rd.number(n["initial"], path + ".initial") : 1.0;
  s.final = n["final"] ? rd.number(n["final"], path + ".final") : 0.0;
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    rd.fail(n, path, e.what());
  }
  return s;
}

SourceElement read_source(const Reader& rd, const YAML::Node& n, const std::string& path) {
  rd.check_keys(n, path,
                {"kind", "strength", "position", "axis", "radius", "width", "length",
                 "turns_per_meter", "wire_radius", "loops", "segments_per_loop", "schedule"});
  if (!n["kind"]) rd.fail(n, path, "missing 'kind'");
  const auto kind = source_kind_from_string(rd.text(n["kind"], path + ".kind"));
  if (!kind) rd.fail(n["kind"], path + ".kind", "unknown source kind '" + n["kind"].Scalar() + "'");
  SourceElement e;
  e.kind = *kind;
  rd.each(n, path, [&](const std::string& key, const YAML::Node& v, const std::string& p) {
    if (key == "strength") e.strength = rd.number(v, p);
    else if (key == "position") e.position = rd.vec3(v, p);
    else if (key == "axis") e.axis = rd.vec3(v, p);
    else if (key == "radius") e.radius = rd.number(v, p);
    else if (key == "width") e.width = rd.number(v, p);
    else if (key == "length") e.length = rd.number(v, p);
    else if (key == "turns_per_meter") e.turns_per_meter = rd.number(v, p);
    else if (key == "wire_radius") e.wire_radius = rd.number(v, p);
    else if (key == "loops") e.loops = static_cast<int>(rd.integer(v, p));
    else if (key == "segments_per_loop") e.segments_per_loop = static_cast<int>(rd.integer(v, p));
    else if (key == "schedule") e.schedule = read_schedule(rd, v, p);
  });
  if (e.axis.norm() > 0) e.axis.normalize();
  try {
    e.validate();
  } catch (const std::invalid_argument& err) {
    rd.fail(n, path, err.what());
  }
  return e;
}

std::vector<Waypoint> read_path(const Reader& rd, const YAML::Node& n, const std::string& path) {
  if (!n.IsSequence() || n.size() < 2) rd.fail(n, path, "expected a list of >= 2 waypoints");
  std::vector<Waypoint> out;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const std::string p = path + "[" + std::to_string(i) + "]";
    rd.check_keys(n[i], p, {"t", "r"});
    if (!n[i]["t"] || !n[i]["r"]) rd.fail(n[i], p, "waypoint needs 't' and 'r'");
    out.push_back({rd.number(n[i]["t"], p + ".t"), rd.vec3(n[i]["r"], p + ".r")});
    if (i > 0 && !(out[i].t > out[i - 1].t)) rd.fail(n[i], p + ".t", "times must increase");
  }
  return out;
}

void read_gauge(const Reader& rd, const YAML::Node& n, RunConfiguration& cfg) {
  rd.check_keys(n, "gauge", {"label", "terms"});
  cfg.gauge_label = n["label"] ? rd.text(n["label"], "gauge.label") : "custom";
  if (!n["terms"]) return;
  const auto& terms = n["terms"];
  if (!terms.IsSequence()) rd.fail(terms, "gauge.terms", "expected a list");
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const auto& t = terms[i];
    const std::string p = "gauge.terms[" + std::to_string(i) + "]";
    rd.check_keys(t, p,
                  {"kind", "amplitude", "center", "vector", "width", "rate", "omega", "phase",
                   "sigma"});
    if (!t["kind"]) rd.fail(t, p, "missing 'kind'");
    const auto kind = gauge_kind_from_string(rd.text(t["kind"], p + ".kind"));
    if (!kind) rd.fail(t["kind"], p + ".kind", "unknown gauge kind '" + t["kind"].Scalar() + "'");
    if (*kind == GaugeKind::from_modes) {
      ModeGaugeTermSpec m;
      rd.each(t, p, [&](const std::string& key, const YAML::Node& v, const std::string& q) {
        if (key == "amplitude") m.amplitude = rd.number(v, q);
        else if (key == "width") m.width = rd.number(v, q);
        else if (key == "omega") m.omega = rd.number(v, q);
        else if (key == "sigma") m.sigma = static_cast<int>(rd.integer(v, q));
        else if (key != "kind") rd.fail(v, q, "not used by from_modes");
      });
      if (m.sigma < 0 || m.sigma > 3) rd.fail(t, p + ".sigma", "sigma must be 0..3");
      if (!(m.width > 0)) rd.fail(t, p + ".width", "width must be > 0");
      cfg.mode_gauge_terms.push_back(m);
      continue;
    }
    GaugeTerm g;
    g.kind = *kind;
    rd.each(t, p, [&](const std::string& key, const YAML::Node& v, const std::string& q) {
      if (key == "amplitude") g.amplitude = rd.number(v, q);
      else if (key == "center") g.center = rd.vec3(v, q);
      else if (key == "vector") g.vector = rd.vec3(v, q);
      else if (key == "width") g.width = rd.number(v, q);
      else if (key == "rate") g.rate = rd.number(v, q);
      else if (key == "omega") g.omega = rd.number(v, q);
      else if (key == "phase") g.phase = rd.number(v, q);
      else if (key == "sigma") rd.fail(v, q, "only used by from_modes");
    });
    try {
      g.validate();
    } catch (const std::invalid_argument& e) {
      rd.fail(t, p, e.what());
    }
    cfg.gauge_terms.push_back(g);
  }
}

void read_numerics(const Reader& rd, const YAML::Node& n, NumericsSpec& num) {
  rd.check_keys(n, "numerics",
                {"phase_tol", "phase_rel_tol", "phase_max_depth", "phase_max_intervals",
                 "quad_rel_tol", "quad_max_depth", "force_quadrature", "filament_loops",
                 "filament_segments", "exclusion_radius", "k_max", "kspace_levels",
                 "kspace_max_levels", "kspace_rel_tol", "force_cubature", "ground_k_max",
                 "ground_levels", "ground_max_levels", "ground_rel_tol", "convergence_levels",
                 "modespace_probes"});
  rd.each(n, "numerics", [&](const std::string& key, const YAML::Node& v, const std::string& p) {
    auto positive = [&](double x) {
      if (!(x > 0)) rd.fail(v, p, "must be > 0");
      return x;
    };
    auto count = [&](long x, long lo) {
      if (x < lo) rd.fail(v, p, "must be >= " + std::to_string(lo));
      return static_cast<int>(x);
    };
    if (key == "phase_tol") num.phase.phase_tol = positive(rd.number(v, p));
    else if (key == "phase_rel_tol") num.phase.rel_tol = rd.number(v, p);
    else if (key == "phase_max_depth") num.phase.max_depth = count(rd.integer(v, p), 1);
    else if (key == "phase_max_intervals") num.phase.max_intervals = count(rd.integer(v, p), 1);
    else if (key == "quad_rel_tol") num.quadrature.rel_tol = positive(rd.number(v, p));
    else if (key == "quad_max_depth") num.quadrature.max_subdivision_depth = count(rd.integer(v, p), 1);
    else if (key == "force_quadrature") num.quadrature.force_quadrature = rd.boolean(v, p);
    else if (key == "filament_loops") num.quadrature.filament_loops = count(rd.integer(v, p), 0);
    else if (key == "filament_segments") num.quadrature.filament_segments = count(rd.integer(v, p), 0);
    else if (key == "exclusion_radius") num.quadrature.exclusion_radius = positive(rd.number(v, p));
    else if (key == "k_max") num.kspace.k_max = rd.number(v, p);
    else if (key == "kspace_levels") num.kspace.levels = count(rd.integer(v, p), 3);
    else if (key == "kspace_max_levels") num.kspace.max_levels = count(rd.integer(v, p), 3);
    else if (key == "kspace_rel_tol") num.kspace.rel_tol = positive(rd.number(v, p));
    else if (key == "force_cubature") num.kspace.force_cubature = rd.boolean(v, p);
    else if (key == "ground_k_max") num.ground.k_max = rd.number(v, p);
    else if (key == "ground_levels") num.ground.levels = count(rd.integer(v, p), 3);
    else if (key == "ground_max_levels") num.ground.max_levels = count(rd.integer(v, p), 3);
    else if (key == "ground_rel_tol") num.ground.rel_tol = positive(rd.number(v, p));
    else if (key == "convergence_levels") num.convergence_levels = count(rd.integer(v, p), 4);
    else if (key == "modespace_probes") num.modespace_probes = count(rd.integer(v, p), 1);
  });
  try {
    num.quadrature.validate();
  } catch (const std::invalid_argument& e) {
    rd.fail(n, "numerics", e.what());
  }
}

void read_probes(const Reader& rd, const YAML::Node& n, ProbeSpec& pr) {
  rd.check_keys(n, "probes", {"points", "times", "random"});
  if (n["points"]) {
    const auto& pts = n["points"];
    if (!pts.IsSequence()) rd.fail(pts, "probes.points", "expected a list of [x, y, z]");
    for (std::size_t i = 0; i < pts.size(); ++i)
      pr.points.push_back(rd.vec3(pts[i], "probes.points[" + std::to_string(i) + "]"));
  }
  if (n["times"]) {
    const auto& ts = n["times"];
    if (!ts.IsSequence() || ts.size() == 0) rd.fail(ts, "probes.times", "expected a list of times");
    pr.times.clear();
    for (std::size_t i = 0; i < ts.size(); ++i)
      pr.times.push_back(rd.number(ts[i], "probes.times[" + std::to_string(i) + "]"));
  }
  if (n["random"]) {
    const auto& r = n["random"];
    rd.check_keys(r, "probes.random", {"count", "box_min", "box_max"});
    if (r["count"]) pr.random_count = static_cast<int>(rd.integer(r["count"], "probes.random.count"));
    if (r["box_min"]) pr.box_min = rd.vec3(r["box_min"], "probes.random.box_min");
    if (r["box_max"]) pr.box_max = rd.vec3(r["box_max"], "probes.random.box_max");
    if (pr.random_count < 0) rd.fail(r, "probes.random.count", "must be >= 0");
    if (!(pr.box_max.array() > pr.box_min.array()).all())
      rd.fail(r, "probes.random", "box_max must exceed box_min in every component");
  }
}

RunConfiguration read_root(const YAML::Node& root, const std::string& origin) {
  Reader rd(origin);
  RunConfiguration cfg;
  cfg.origin = origin;
  if (root.IsNull()) return cfg;
  rd.check_keys(root, "",
                {"units", "preset", "parameters", "particle", "sources", "scenario", "gauge",
                 "sweep", "probes", "numerics", "output", "seed"});
  if (root["units"]) {
    auto u = units_from_string(rd.text(root["units"], "units"));
    if (!u) rd.fail(root["units"], "units", "expected si or reduced");
    cfg.units = *u;
  }
  if (root["preset"]) {
    auto p = preset_from_string(rd.text(root["preset"], "preset"));
    if (!p) rd.fail(root["preset"], "preset", "expected magnetic, electric or electrodynamic");
    cfg.preset = *p;
  }
  if (root["parameters"]) {
    const auto& ps = root["parameters"];
    rd.require_map(ps, "parameters");
    rd.each(ps, "parameters", [&](const std::string& key, const YAML::Node& v, const std::string& p) {
      cfg.overrides.push_back({key, rd.text(v, p), rd.where(v)});
    });
  }
  if (root["particle"]) {
    const auto& n = root["particle"];
    rd.check_keys(n, "particle", {"charge", "mass"});
    Particle q = Particle::for_units(cfg.units);
    if (n["charge"]) q.charge = rd.number(n["charge"], "particle.charge");
    if (n["mass"]) q.mass = rd.number(n["mass"], "particle.mass");
    if (!(q.mass > 0)) rd.fail(n, "particle.mass", "must be > 0");
    cfg.particle = q;
  }
  if (root["sources"]) {
    const auto& s = root["sources"];
    if (!s.IsSequence()) rd.fail(s, "sources", "expected a list of source elements");
    for (std::size_t i = 0; i < s.size(); ++i)
      cfg.sources.push_back(read_source(rd, s[i], "sources[" + std::to_string(i) + "]"));
  }
  if (root["scenario"]) {
    const auto& n = root["scenario"];
    rd.check_keys(n, "scenario", {"path_a", "path_b", "velocity", "open"});
    if (cfg.preset) rd.fail(n, "scenario", "'scenario' and 'preset' are exclusive");
    if (!n["path_a"] || !n["path_b"]) rd.fail(n, "scenario", "needs 'path_a' and 'path_b'");
    CustomScenario sc;
    sc.path_a = read_path(rd, n["path_a"], "scenario.path_a");
    sc.path_b = read_path(rd, n["path_b"], "scenario.path_b");
    if (n["velocity"]) {
      const auto v = rd.text(n["velocity"], "scenario.velocity");
      if (v == "catmull_rom") sc.velocity = VelocityRule::catmull_rom;
      else if (v != "stop_at_waypoints")
        rd.fail(n["velocity"], "scenario.velocity", "expected stop_at_waypoints or catmull_rom");
    }
    if (n["open"]) sc.open = rd.boolean(n["open"], "scenario.open");
    cfg.scenario = sc;
  }
  if (root["gauge"]) read_gauge(rd, root["gauge"], cfg);
  if (root["sweep"]) {
    const auto& n = root["sweep"];
    rd.check_keys(n, "sweep", {"count", "seed"});
    if (n["count"]) {
      cfg.sweep_count = static_cast<int>(rd.integer(n["count"], "sweep.count"));
      if (cfg.sweep_count < 1) rd.fail(n["count"], "sweep.count", "must be >= 1");
    }
    if (n["seed"]) {
      const long s = rd.integer(n["seed"], "sweep.seed");
      if (s < 0) rd.fail(n["seed"], "sweep.seed", "must be >= 0");
      cfg.sweep_seed = static_cast<std::uint64_t>(s);
    }
  }
  if (root["probes"]) read_probes(rd, root["probes"], cfg.probes);
  if (root["numerics"]) read_numerics(rd, root["numerics"], cfg.numerics);
  if (root["output"]) {
    const auto& n = root["output"];
    rd.check_keys(n, "output", {"dir"});
    if (n["dir"]) cfg.out_dir = rd.text(n["dir"], "output.dir");
  }
  if (root["seed"]) {
    const long s = rd.integer(root["seed"], "seed");
    if (s < 0) rd.fail(root["seed"], "seed", "must be >= 0");
    cfg.seed = static_cast<std::uint64_t>(s);
  }
  // Parameter names and values are checked now, against the chosen preset.
  (void)cfg.resolved_presets();
  return cfg;
}

}  // namespace

RunConfiguration parse_config_text(const std::string& text, const std::string& origin) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigParseError(origin + ":" + std::to_string(e.mark.line + 1) + ":" +
                           std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
  if (!root.IsNull() && !root.IsMap())
    throw ConfigParseError(origin + ": top level must be a mapping");
  try {
    return read_root(root, origin);
  } catch (const YAML::Exception& e) {
    throw ConfigParseError(origin + ":" + std::to_string(e.mark.line + 1) + ":" +
                           std::to_string(e.mark.column + 1) + ": " + e.msg);
  }
}

RunConfiguration parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigParseError(path + ": cannot open configuration file");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), path);
}

}  // namespace abqed::cli
