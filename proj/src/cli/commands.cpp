#include "abqed/cli/commands.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>

#include "abqed/quadrature.hpp"

namespace abqed::cli {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

namespace {

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json number_json(double x) {
  if (!std::isfinite(x)) return nullptr;
  return x;
}

class Csv {
 public:
  Csv(const fs::path& path, const std::string& kind, const RunConfiguration& cfg,
      std::vector<std::string> columns)
      : out_(path), width_(columns.size()) {
    if (!out_) throw Error("cannot write " + path.string());
    out_ << "# abqed " << kind << " csv v" << csv_version << " units=" << to_string(cfg.units)
         << "\n";
    for (std::size_t i = 0; i < columns.size(); ++i) out_ << (i ? "," : "") << columns[i];
    out_ << "\n";
  }
  void row(const std::vector<std::string>& cells) {
    if (cells.size() != width_) throw std::logic_error("csv row width mismatch");
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << "\n";
  }

 private:
  std::ofstream out_;
  std::size_t width_;
};

fs::path prepare_out(const RunConfiguration& cfg) {
  fs::path dir(cfg.out_dir);
  fs::create_directories(dir);
  return dir;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

class Uniform {
 public:
  explicit Uniform(std::uint64_t seed) : engine_(seed) {}
  double operator()() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double operator()(double lo, double hi) { return lo + (hi - lo) * (*this)(); }
  Vec3 direction() {
    const double z = (*this)(-1.0, 1.0);
    const double ph = (*this)(0.0, 2 * pi);
    const double s = std::sqrt(1.0 - z * z);
    return {s * std::cos(ph), s * std::sin(ph), z};
  }

 private:
  std::mt19937_64 engine_;
};

void emit_warnings(const std::vector<std::string>& warnings, std::ostream& err, json& summary) {
  summary["warnings"] = json::array();
  for (const auto& w : warnings) {
    err << "warning: " << w << "\n";
    summary["warnings"].push_back(w);
  }
}

void phase_rows(Csv& csv, const std::string& prefix_a, const std::string& prefix_b,
                const PhaseResult& r) {
  const std::string calc = to_string(r.calculator);
  for (auto [label, p] : {std::pair<const char*, const PathPhase*>{"a", &r.a}, {"b", &r.b}})
    csv.row({prefix_a, prefix_b, calc, label, num(p->phase), num(p->scalar_term),
             num(p->vector_term), num(p->est_error)});
  csv.row({prefix_a, prefix_b, calc, "delta", num(r.delta), num(r.a.scalar_term - r.b.scalar_term),
           num(r.a.vector_term - r.b.vector_term), num(r.est_error)});
}

json phase_json(const PhaseResult& r) {
  return {{"phi_a", r.phi_a},
          {"phi_b", r.phi_b},
          {"delta", r.delta},
          {"est_error", r.est_error},
          {"evaluations", r.a.evaluations + r.b.evaluations}};
}

std::string describe(const InterferometerScenario& s) {
  return s.name + " (" + s.gauge.label() + ")";
}

}  // namespace

std::vector<std::string> adiabaticity_warnings(const SourceConfiguration& config,
                                               double diameter) {
  std::vector<std::string> out;
  const double limit = 100.0 * diameter / config.constants.c;
  for (std::size_t i = 0; i < config.elements.size(); ++i) {
    const auto& s = config.elements[i].schedule;
    if (s.kind == ScheduleKind::constant) continue;
    const double ramp = s.t_end - s.t_start;
    if (ramp < limit) {
      std::ostringstream msg;
      msg << "source " << i << " (" << to_string(config.elements[i].kind) << ") ramps over "
          << ramp << " s, less than 100 * diameter / c = " << limit
          << " s; the quasistatic treatment may not hold";
      out.push_back(msg.str());
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// run

int cmd_run(const RunConfiguration& cfg, std::ostream& out, std::ostream& err) {
  Stopwatch clock;
  const auto sc = cfg.build_scenario();
  const auto dir = prepare_out(cfg);
  json summary;
  summary["command"] = "run";
  summary["scenario"] = sc.name;
  summary["gauge"] = sc.gauge.label();
  summary["units"] = to_string(cfg.units);
  emit_warnings(adiabaticity_warnings(sc.field->config(), sc.diameter()), err, summary);

  Csv csv(dir / "run.csv", "run", cfg,
          {"scenario", "gauge", "calculator", "path", "phase", "scalar_term", "vector_term",
           "est_error"});
  if (sc.open_mode) {
    const std::vector<GaugeFunction> gauges{sc.gauge};
    const auto rows = open_path_report(sc, gauges);
    summary["open"] = true;
    summary["paths"] = json::array();
    out << "scenario " << describe(sc) << " (open paths)\n";
    out << std::left << std::setw(13) << "calculator" << std::setw(6) << "path" << std::setw(26)
        << "phase [rad]" << "est_error\n";
    for (const auto& r : rows) {
      csv.row({sc.name, r.gauge_label, to_string(r.calculator), std::string(1, r.path),
               num(r.phase.phase), num(r.phase.scalar_term), num(r.phase.vector_term),
               num(r.phase.est_error)});
      summary["paths"].push_back({{"calculator", to_string(r.calculator)},
                                  {"path", std::string(1, r.path)},
                                  {"phase", r.phase.phase},
                                  {"est_error", r.phase.est_error}});
      out << std::setw(13) << to_string(r.calculator) << std::setw(6) << r.path
          << std::setw(26) << num(r.phase.phase) << num(r.phase.est_error) << "\n";
    }
  } else {
    const auto d = phase_difference(sc);
    phase_rows(csv, sc.name, sc.gauge.label(), d.hamiltonian);
    phase_rows(csv, sc.name, sc.gauge.label(), d.energy);
    summary["open"] = false;
    summary["hamiltonian"] = phase_json(d.hamiltonian);
    summary["energy"] = phase_json(d.energy);
    summary["calculator_mismatch"] = d.calculator_mismatch;
    summary["agreement_required"] = d.agreement_required;
    summary["reference_delta"] = number_json(sc.reference_delta);
    out << std::left << std::setw(18) << "preset" << std::setw(12) << "gauge" << std::setw(13)
        << "calculator" << std::setw(26) << "delta [rad]" << "est_error\n";
    for (const auto* r : {&d.hamiltonian, &d.energy})
      out << std::setw(18) << sc.name << std::setw(12) << sc.gauge.label() << std::setw(13)
          << to_string(r->calculator) << std::setw(26) << num(r->delta) << num(r->est_error)
          << "\n";
    if (std::isfinite(sc.reference_delta))
      out << "reference delta " << num(sc.reference_delta) << " rad, relative deviation "
          << num(std::abs(d.hamiltonian.delta - sc.reference_delta) /
                 std::max(std::abs(sc.reference_delta), 1e-300))
          << "\n";
  }
  summary["wall_time_s"] = clock.seconds();
  out << "wall time " << std::fixed << std::setprecision(3) << clock.seconds() << " s\n"
      << std::defaultfloat;
  write_json(dir / "run.json", summary);
  return exit_ok;
}

// ---------------------------------------------------------------------------
// sweep-gauge

int cmd_sweep_gauge(const RunConfiguration& cfg, std::ostream& out, std::ostream& err) {
  Stopwatch clock;
  const auto sc = cfg.build_scenario();
  if (sc.open_mode) throw BadScenarioParameters("sweep-gauge needs a closed scenario");
  const auto dir = prepare_out(cfg);
  const std::uint64_t seed = cfg.effective_seed();
  const auto family = random_gauge_family(seed, cfg.sweep_count, family_bounds_for(sc));
  const auto sw = gauge_sweep(sc, family);

  json summary;
  summary["command"] = "sweep-gauge";
  summary["scenario"] = sc.name;
  summary["units"] = to_string(cfg.units);
  summary["seed"] = seed;
  summary["count"] = cfg.sweep_count;
  emit_warnings(adiabaticity_warnings(sc.field->config(), sc.diameter()), err, summary);

  Csv csv(dir / "sweep.csv", "sweep-gauge", cfg,
          {"gauge_index", "gauge_label", "calculator", "path", "phase", "scalar_term",
           "vector_term", "est_error"});
  phase_rows(csv, "0", "lorenz", sw.lorenz.hamiltonian);
  phase_rows(csv, "0", "lorenz", sw.lorenz.energy);
  double max_phase = std::max({std::abs(sw.lorenz.hamiltonian.phi_a),
                               std::abs(sw.lorenz.hamiltonian.phi_b)});
  for (const auto& row : sw.rows) {
    const std::string idx = std::to_string(row.gauge_index + 1);
    phase_rows(csv, idx, row.gauge_label, row.result.hamiltonian);
    phase_rows(csv, idx, row.gauge_label, row.result.energy);
    for (double x : {row.result.hamiltonian.phi_a, row.result.hamiltonian.phi_b,
                     row.result.energy.phi_a, row.result.energy.phi_b})
      max_phase = std::max(max_phase, std::abs(x));
  }

  // Invariance is judged against the phase tolerance, or against the
  // floating-point resolution of the path phases when that is coarser.
  const double resolution = 64 * std::numeric_limits<double>::epsilon() * max_phase;
  const double tolerance = std::max(sc.numerics.phase_tol, resolution);
  const double worst =
      std::max(sw.max_delta_deviation_hamiltonian, sw.max_delta_deviation_energy);
  const bool ok = worst <= tolerance;

  summary["lorenz_delta_hamiltonian"] = sw.lorenz.hamiltonian.delta;
  summary["lorenz_delta_energy"] = sw.lorenz.energy.delta;
  summary["max_delta_deviation_hamiltonian"] = sw.max_delta_deviation_hamiltonian;
  summary["max_delta_deviation_energy"] = sw.max_delta_deviation_energy;
  summary["max_calculator_mismatch"] = sw.max_calculator_mismatch;
  summary["per_path_spread"] = sw.per_path_spread;
  summary["invariance_tolerance"] = tolerance;
  summary["resolution_limited"] = resolution > sc.numerics.phase_tol;
  summary["invariant"] = ok;
  summary["wall_time_s"] = clock.seconds();
  write_json(dir / "sweep.json", summary);

  out << "scenario " << sc.name << ", " << sw.rows.size() << " gauges, seed " << seed << "\n";
  out << std::left << std::setw(8) << "index" << std::setw(22) << "gauge" << std::setw(26)
      << "delta hamiltonian" << std::setw(26) << "delta energy" << "est_error\n";
  out << std::setw(8) << 0 << std::setw(22) << "lorenz" << std::setw(26)
      << num(sw.lorenz.hamiltonian.delta) << std::setw(26) << num(sw.lorenz.energy.delta)
      << num(sw.lorenz.hamiltonian.est_error) << "\n";
  for (const auto& row : sw.rows)
    out << std::setw(8) << row.gauge_index + 1 << std::setw(22) << row.gauge_label
        << std::setw(26) << num(row.result.hamiltonian.delta) << std::setw(26)
        << num(row.result.energy.delta) << num(row.result.hamiltonian.est_error) << "\n";
  out << "max |delta - delta_lorenz|: hamiltonian " << num(sw.max_delta_deviation_hamiltonian)
      << " rad, energy " << num(sw.max_delta_deviation_energy) << " rad (tolerance "
      << num(tolerance) << ")\n";
  out << "per-path phase spread " << num(sw.per_path_spread) << " rad\n";
  out << "wall time " << std::fixed << std::setprecision(3) << clock.seconds() << " s\n"
      << std::defaultfloat;
  if (!ok) {
    err << "error: closed-loop delta changed by " << num(worst) << " rad under a gauge change\n";
    return exit_invariant;
  }
  return exit_ok;
}

// ---------------------------------------------------------------------------
// field-probe

int cmd_field_probe(const RunConfiguration& cfg, std::ostream& out, std::ostream& err) {
  Stopwatch clock;
  const auto config = cfg.source_configuration();
  std::vector<Vec3> points = cfg.probes.points;
  Uniform rng(cfg.seed);
  for (int i = 0; i < cfg.probes.random_count; ++i) {
    Vec3 p;
    for (int c = 0; c < 3; ++c) p[c] = rng(cfg.probes.box_min[c], cfg.probes.box_max[c]);
    points.push_back(p);
  }
  if (points.empty())
    throw ConfigParseError(cfg.origin + ": key 'probes': no probe points configured");
  const auto dir = prepare_out(cfg);
  const FieldModel model(config, cfg.numerics.quadrature);

  json summary;
  summary["command"] = "field-probe";
  summary["units"] = to_string(cfg.units);
  summary["points"] = points.size();
  summary["times"] = cfg.probes.times.size();
  double extent = 0.0;
  for (const auto& a : points)
    for (const auto& b : points) extent = std::max(extent, (a - b).norm());
  for (const auto& e : config.elements)
    if (std::isfinite(e.extent())) extent = std::max(extent, 2 * e.extent());
  emit_warnings(adiabaticity_warnings(config, extent), err, summary);

  Csv csv(dir / "field_probe.csv", "field-probe", cfg,
          {"x", "y", "z", "t", "V", "Ax", "Ay", "Az", "est_error"});
  double worst = 0.0;
  for (double t : cfg.probes.times)
    for (const auto& p : points) {
      const auto s = model.both(p, t);
      worst = std::max(worst, s.max_est_error());
      csv.row({num(p.x()), num(p.y()), num(p.z()), num(t), num(s.V), num(s.A.x()),
               num(s.A.y()), num(s.A.z()), num(s.max_est_error())});
    }
  summary["max_est_error"] = worst;
  summary["wall_time_s"] = clock.seconds();
  write_json(dir / "field_probe.json", summary);
  out << "field-probe: " << points.size() * cfg.probes.times.size() << " samples, max est_error "
      << num(worst) << ", wall time " << std::fixed << std::setprecision(3) << clock.seconds()
      << " s\n"
      << std::defaultfloat;
  return exit_ok;
}

// ---------------------------------------------------------------------------
// modespace-check

std::vector<NamedSource> modespace_reference_sources(UnitSystem units) {
  const auto k = PhysicalConstants::for_units(units);
  const double q = units == UnitSystem::si ? 1e-12 : 1.0;
  const double I = units == UnitSystem::si ? 1e-3 : 1.0;
  const Vec3 o = Vec3::Zero();
  auto one = [&](const SourceElement& e) { return SourceConfiguration({e}, k); };
  return {
      {"point_charge", one(SourceElement::point_charge(q, o)), 1.0},
      {"gaussian_charge_ball", one(SourceElement::gaussian_ball(q, o, 0.25)), 1.0},
      {"charged_shell", one(SourceElement::charged_shell(q, o, 0.5)), 1.0},
      {"current_loop", one(SourceElement::current_loop(I, o, Vec3::UnitZ(), 0.5)), 1.0},
      {"finite_solenoid",
       one(SourceElement::finite_solenoid(I, o, Vec3::UnitZ(), 0.3, 0.6, 10.0, 6)), 1.0},
  };
}

std::vector<Vec3> modespace_probe_points(const SourceConfiguration& config, double scale,
                                         int count, std::uint64_t seed) {
  Uniform rng(seed);
  std::vector<Vec3> out;
  int attempts = 0;
  while (static_cast<int>(out.size()) < count) {
    if (++attempts > 1000 * (count + 1))
      throw BadScenarioParameters("could not place probe points away from the sources");
    const Vec3 p = rng(0.2, 3.0) * scale * rng.direction();
    bool ok = true;
    for (const auto& e : config.elements)
      ok = ok && distance_to_singular_support(e, p) > 0.1 * scale;
    if (ok) out.push_back(p);
  }
  return out;
}

ModespaceProbe compare_modespace(const SourceConfiguration& config, const FieldModel& real,
                                 const Vec3& r, const KSpaceSettings& settings) {
  ModespaceProbe p;
  p.r = r;
  p.real = real.both(r, 0.0);
  p.kspace = reconstruct_potentials_kspace(config, r, 0.0, settings);
  const double V = std::abs(p.real.V);
  p.rel_error_V = V > 0 ? std::abs(p.kspace.field.V - p.real.V) / V
                        : std::abs(p.kspace.field.V);
  const double A = p.real.A.norm();
  p.rel_error_A = A > 0 ? (p.kspace.field.A - p.real.A).norm() / A : p.kspace.field.A.norm();
  return p;
}

double max_longitudinal_fraction(const SourceConfiguration& config, double scale, int count,
                                 std::uint64_t seed, TransformMethod method) {
  Uniform rng(seed);
  double worst = 0.0;
  for (int i = 0; i < count; ++i) {
    const double kmag = 0.5 * std::pow(40.0, rng()) / scale;
    const Vec3 k = kmag * rng.direction();
    const auto lam = lambda_current(config, k, 0.0, PolarizationBasis::for_direction(k), method);
    const double total = std::sqrt(std::norm(lam[0]) + std::norm(lam[1]) + std::norm(lam[2]));
    if (total > 0) worst = std::max(worst, std::abs(lam[2]) / total);
  }
  return worst;
}

int cmd_modespace_check(const RunConfiguration& cfg, std::ostream& out, std::ostream&) {
  Stopwatch clock;
  std::vector<NamedSource> sources;
  if (!cfg.sources.empty()) {
    for (std::size_t i = 0; i < cfg.sources.size(); ++i) {
      const auto& e = cfg.sources[i];
      double scale = std::max({e.radius, e.width * 4, e.length / 2});
      if (!(scale > 0)) scale = 1.0;
      sources.push_back({std::to_string(i) + ":" + to_string(e.kind),
                         SourceConfiguration({e}, cfg.constants()), scale});
    }
  } else {
    sources = modespace_reference_sources(cfg.units);
  }
  const auto dir = prepare_out(cfg);
  const double tolerance = 1e-3;
  const int probes = cfg.numerics.modespace_probes;

  json summary;
  summary["command"] = "modespace-check";
  summary["units"] = to_string(cfg.units);
  summary["seed"] = cfg.seed;
  summary["tolerance"] = tolerance;
  summary["sources"] = json::array();

  Csv csv(dir / "modespace.csv", "modespace-check", cfg,
          {"source", "probe", "x", "y", "z", "V_real", "V_kspace", "Ax_real", "Ay_real",
           "Az_real", "Ax_kspace", "Ay_kspace", "Az_kspace", "rel_error", "est_error"});
  bool ok = true;
  out << std::left << std::setw(26) << "source" << std::setw(24) << "max rel error"
      << std::setw(24) << "max |lambda_3|/|lambda|" << "C [J]\n";
  for (std::size_t si = 0; si < sources.size(); ++si) {
    const auto& src = sources[si];
    const FieldModel real(src.config, cfg.numerics.quadrature);
    const auto pts = modespace_probe_points(src.config, src.scale, probes, cfg.seed + si);
    double worst = 0.0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto p = compare_modespace(src.config, real, pts[i], cfg.numerics.kspace);
      const double rel = std::max(p.rel_error_V, p.rel_error_A);
      worst = std::max(worst, rel);
      const double est = std::max(p.real.max_est_error(), p.kspace.field.max_est_error());
      csv.row({src.name, std::to_string(i), num(p.r.x()), num(p.r.y()), num(p.r.z()),
               num(p.real.V), num(p.kspace.field.V), num(p.real.A.x()), num(p.real.A.y()),
               num(p.real.A.z()), num(p.kspace.field.A.x()), num(p.kspace.field.A.y()),
               num(p.kspace.field.A.z()), num(rel), num(est)});
    }
    json entry{{"name", src.name}, {"probes", pts.size()}, {"max_rel_error", worst}};
    double lambda3 = 0.0;
    if (src.config.has_currents()) {
      lambda3 = max_longitudinal_fraction(src.config, src.scale, 20, cfg.seed + 100 + si);
      entry["max_lambda3_fraction"] = lambda3;
      if (lambda3 > 1e-10) ok = false;
    }
    std::string c_text;
    try {
      const auto C = ground_energy_constant(src.config, 0.0, cfg.numerics.ground);
      entry["ground_energy"] = {{"value", C.value},
                                {"est_error", C.est_error},
                                {"converged", C.converged}};
      c_text = num(C.value) + (C.converged ? "" : " (not converged)");
    } catch (const SelfEnergyDivergent&) {
      entry["ground_energy"] = "divergent";
      c_text = "divergent";
    }
    if (worst > tolerance) ok = false;
    summary["sources"].push_back(entry);
    out << std::setw(26) << src.name << std::setw(24) << num(worst) << std::setw(24)
        << (src.config.has_currents() ? num(lambda3) : std::string("-")) << c_text << "\n";
  }
  summary["passed"] = ok;
  summary["wall_time_s"] = clock.seconds();
  write_json(dir / "modespace.json", summary);
  out << "wall time " << std::fixed << std::setprecision(3) << clock.seconds() << " s\n"
      << std::defaultfloat;
  return ok ? exit_ok : exit_invariant;
}

// ---------------------------------------------------------------------------
// convergence

int cmd_convergence(const RunConfiguration& cfg, std::ostream& out, std::ostream&) {
  Stopwatch clock;
  const int levels = cfg.numerics.convergence_levels;
  const auto k = cfg.constants();
  const auto dir = prepare_out(cfg);
  Csv csv(dir / "convergence.csv", "convergence", cfg,
          {"quantity", "level", "parameter", "value", "est_error", "observed_order"});
  json summary;
  summary["command"] = "convergence";
  summary["units"] = to_string(cfg.units);
  summary["levels"] = levels;
  summary["quantities"] = json::object();

  // Errors against a reference (or the extrapolated limit when none).
  auto report = [&](const std::string& name, const std::vector<double>& params,
                    const std::vector<double>& values, double reference) {
    const auto ex = quad::extrapolate_doubling(values);
    const double limit = std::isfinite(reference) ? reference : ex.value;
    std::vector<double> errors;
    for (std::size_t i = 0; i < values.size(); ++i) {
      double e = std::abs(values[i] - limit) / std::max(std::abs(limit), 1e-300);
      if (!std::isfinite(reference) && i + 1 == values.size() && std::isfinite(ex.error))
        e = std::max(e, ex.error / std::max(std::abs(limit), 1e-300));
      errors.push_back(e);
      double order = std::numeric_limits<double>::quiet_NaN();
      if (i > 0 && errors[i] > 0 && errors[i - 1] > 0)
        order = std::log2(errors[i - 1] / errors[i]) / std::log2(params[i] / params[i - 1]);
      csv.row({name, std::to_string(i), num(params[i]), num(values[i]), num(e), num(order)});
    }
    bool monotone = true;
    for (std::size_t i = 1; i < errors.size(); ++i)
      monotone = monotone && errors[i] <= errors[i - 1] * (1 + 1e-12) + 1e-15;
    summary["quantities"][name] = {{"reference", number_json(reference)},
                                   {"extrapolated", ex.value},
                                   {"extrapolation_error", number_json(ex.error)},
                                   {"observed_order", number_json(ex.observed_order)},
                                   {"final_relative_error", errors.back()},
                                   {"monotone", monotone}};
    const double ex_rel = std::isfinite(reference)
                              ? std::abs(ex.value - reference) / std::max(std::abs(reference), 1e-300)
                              : ex.error / std::max(std::abs(ex.value), 1e-300);
    summary["quantities"][name]["extrapolated_relative_error"] = number_json(ex_rel);
    out << std::left << std::setw(32) << name << "last level " << std::setw(24)
        << num(errors.back()) << "extrapolated " << std::setw(24) << num(ex_rel)
        << (monotone ? "monotone" : "not monotone") << "\n";
  };

  const auto mp = PresetParameters::defaults(cfg.units).magnetic;
  const double a = mp.solenoid.radius;

  {  // Analytic solenoid: circulation at the machine floor for any polyline.
    SolenoidParams s = mp.solenoid;
    s.finite = false;
    const auto sol = make_solenoid(mp.flux, s, k);
    const FieldModel model(SourceConfiguration({sol}, k), cfg.numerics.quadrature);
    std::vector<double> params, values;
    for (int j = 0; j < levels; ++j) {
      const int n = 4 << j;  // vertices per side
      std::vector<Vec3> loop;
      const double h = mp.half_width;
      const std::array<Vec3, 4> corners{Vec3(-h, -h, 0), Vec3(h, -h, 0), Vec3(h, h, 0),
                                        Vec3(-h, h, 0)};
      for (int c = 0; c < 4; ++c)
        for (int i = 0; i < n; ++i)
          loop.push_back(corners[c] + (corners[(c + 1) % 4] - corners[c]) * (double(i) / n));
      loop.push_back(loop.front());
      params.push_back(4.0 * n);
      values.push_back(circulation(model, loop, 0.0).value);
    }
    report("analytic_solenoid_circulation", params, values, mp.flux);
  }
  {  // Finite solenoid: loop count doubling, frame at 1.5 radii.
    std::vector<double> params, values;
    for (int j = 0; j < levels; ++j) {
      SolenoidParams s = mp.solenoid;
      s.finite = true;
      s.loops = 25 << j;
      const auto sol = make_solenoid(mp.flux, s, k);
      const FieldModel model(SourceConfiguration({sol}, k), cfg.numerics.quadrature);
      const double h = 1.5 * a;
      const std::vector<Vec3> loop{Vec3(-h, -h, 0), Vec3(h, -h, 0), Vec3(h, h, 0),
                                   Vec3(-h, h, 0), Vec3(-h, -h, 0)};
      params.push_back(s.loops);
      values.push_back(circulation(model, loop, 0.0).value);
    }
    report("finite_solenoid_circulation", params, values,
           std::numeric_limits<double>::quiet_NaN());
  }
  {  // Kernel identity at r = 1 (scaled to the solenoid radius in SI).
    const double r = cfg.units == UnitSystem::si ? a : 1.0;
    const auto res = kernel_identity_check(r, 4.0 / r, levels);
    report("kernel_identity", res.k_values, res.sequence, res.exact);
  }
  {  // k-space reconstruction of a Gaussian ball's potential.
    const auto src = modespace_reference_sources(cfg.units)[1];
    const Vec3 p(0.3, 0.2, 0.1);
    const FieldModel real(src.config, cfg.numerics.quadrature);
    KSpaceSettings ks = cfg.numerics.kspace;
    ks.k_max = 2.0;
    ks.levels = ks.max_levels = levels;
    ks.rel_tol = 1.0;  // report the raw sequence
    const auto sample = reconstruct_potentials_kspace(src.config, p, 0.0, ks);
    report("kspace_ball_potential", sample.k_values, sample.v_sequence, real.scalar(p, 0.0).V);
  }
  {  // Magnetic phase difference versus the phase tolerance.
    std::vector<double> params, values;
    auto base = cfg.resolved_presets().magnetic;
    double reference = std::numeric_limits<double>::quiet_NaN();
    for (int j = 0; j < levels; ++j) {
      base.numerics.phase_tol = 1e-3 * std::pow(1e-2, j);
      base.numerics.rel_tol = 0.0;
      const auto sc = build_magnetic_preset(base);
      reference = sc.reference_delta;
      params.push_back(1.0 / base.numerics.phase_tol);
      values.push_back(phase_difference(sc).hamiltonian.delta);
    }
    report("magnetic_phase_delta", params, values, reference);
  }
  summary["wall_time_s"] = clock.seconds();
  write_json(dir / "convergence.json", summary);
  out << "wall time " << std::fixed << std::setprecision(3) << clock.seconds() << " s\n"
      << std::defaultfloat;
  return exit_ok;
}

// ---------------------------------------------------------------------------
// presets

int cmd_presets(const RunConfiguration& cfg, std::ostream& out, std::ostream&) {
  const auto params = cfg.resolved_presets();
  const auto dir = prepare_out(cfg);
  json summary;
  summary["command"] = "presets";
  summary["units"] = to_string(cfg.units);
  summary["presets"] = json::object();
  for (auto p : {PresetName::magnetic, PresetName::electric, PresetName::electrodynamic}) {
    json entry = json::object();
    out << to_string(p) << "\n";
    for (const auto& info : preset_parameters()) {
      const auto v = preset_parameter_value(params, p, info.name);
      if (v.empty()) continue;
      entry[info.name] = {{"value", v}, {"type", info.type}, {"help", info.help}};
      out << "  --" << std::left << std::setw(18) << info.name << std::setw(24) << v
          << info.help << "\n";
    }
    summary["presets"][to_string(p)] = entry;
  }
  write_json(dir / "presets.json", summary);
  return exit_ok;
}

// ---------------------------------------------------------------------------

int dispatch(const std::string& command, const RunConfiguration& cfg, std::ostream& out,
             std::ostream& err) {
  try {
    if (command == "run") return cmd_run(cfg, out, err);
    if (command == "sweep-gauge") return cmd_sweep_gauge(cfg, out, err);
    if (command == "field-probe") return cmd_field_probe(cfg, out, err);
    if (command == "modespace-check") return cmd_modespace_check(cfg, out, err);
    if (command == "convergence") return cmd_convergence(cfg, out, err);
    if (command == "presets") return cmd_presets(cfg, out, err);
    err << "abqed: unknown command '" << command << "'\n";
    return exit_config;
  } catch (const ConfigParseError& e) {
    err << "abqed " << command << ": configuration error: " << e.what() << "\n";
    return exit_config;
  } catch (const PhaseNotConverged& e) {
    err << "abqed " << command << ": not converged: " << e.what() << "\n";
    return exit_not_converged;
  } catch (const QuadratureNotConverged& e) {
    err << "abqed " << command << ": not converged: " << e.what() << "\n";
    return exit_not_converged;
  } catch (const CalculatorMismatchOnClosedLoop& e) {
    err << "abqed " << command << ": invariant violated: " << e.what() << "\n";
    return exit_invariant;
  } catch (const std::exception& e) {
    err << "abqed " << command << ": error: " << e.what() << "\n";
    return exit_failure;
  }
}

}  // namespace abqed::cli
