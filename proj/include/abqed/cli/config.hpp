#pragma once

// Run configuration of the abqed command-line tool. The file format is YAML;
// the schema is documented in docs/config.md. Every key is validated before
// any computation and unknown keys are rejected with file:line:column.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "abqed/gauge.hpp"
#include "abqed/interferometer.hpp"
#include "abqed/modespace.hpp"

namespace abqed::cli {

enum class PresetName { magnetic, electric, electrodynamic };

std::string to_string(PresetName p);
std::optional<PresetName> preset_from_string(const std::string& name);
std::optional<UnitSystem> units_from_string(const std::string& name);
std::string to_string(UnitSystem u);

struct PresetParameters {
  MagneticPresetParams magnetic;
  ElectricPresetParams electric;
  ElectrodynamicPresetParams electrodynamic;

  static PresetParameters defaults(UnitSystem u);
};

struct ParameterInfo {
  std::string name;
  std::string type;  // double, int, bool, or the accepted words
  std::string help;
  std::vector<PresetName> presets;
};

/// Every preset parameter accepted in `parameters:` and as `--name` flags.
const std::vector<ParameterInfo>& preset_parameters();

/// Sets one preset parameter from its text form. ConfigParseError (prefixed
/// with `origin`) for unknown names, names not used by `preset`, or bad values.
void set_preset_parameter(PresetParameters& params, PresetName preset,
                          const std::string& name, const std::string& value,
                          const std::string& origin);

/// Text form of a parameter's current value.
std::string preset_parameter_value(const PresetParameters& params, PresetName preset,
                                   const std::string& name);

struct ParameterOverride {
  std::string name;
  std::string value;
  std::string origin;  // file:line:column or --flag
};

struct ProbeSpec {
  std::vector<Vec3> points;
  std::vector<double> times{0.0};
  int random_count = 0;
  Vec3 box_min = Vec3::Constant(-1.0);
  Vec3 box_max = Vec3::Constant(1.0);
};

struct NumericsSpec {
  PhaseSettings phase;
  QuadratureSettings quadrature;
  KSpaceSettings kspace;
  GroundEnergySettings ground;
  int convergence_levels = 4;
  int modespace_probes = 20;
};

struct CustomScenario {
  std::vector<Waypoint> path_a;
  std::vector<Waypoint> path_b;
  VelocityRule velocity = VelocityRule::stop_at_waypoints;
  bool open = false;
};

/// Mode-built gauge term: f_sigma(k, t) = amplitude exp(-k^2 width^2 / 2)
/// cos(omega t) for the selected sigma, zero for the others.
struct ModeGaugeTermSpec {
  int sigma = 0;
  double amplitude = 0.0;
  double width = 1.0;
  double omega = 0.0;
};

struct RunConfiguration {
  std::string origin = "<defaults>";
  UnitSystem units = UnitSystem::si;
  std::optional<PresetName> preset;
  std::vector<ParameterOverride> overrides;
  std::optional<Particle> particle;
  std::vector<SourceElement> sources;
  std::optional<CustomScenario> scenario;
  std::string gauge_label = "lorenz";
  std::vector<GaugeTerm> gauge_terms;
  std::vector<ModeGaugeTermSpec> mode_gauge_terms;
  int sweep_count = 20;
  std::optional<std::uint64_t> sweep_seed;
  std::uint64_t seed = 7;
  ProbeSpec probes;
  NumericsSpec numerics;
  std::string out_dir = "abqed_out";

  PhysicalConstants constants() const { return PhysicalConstants::for_units(units); }
  Particle resolved_particle() const {
    return particle ? *particle : Particle::for_units(units);
  }
  /// Seed for random families: sweep.seed, else seed.
  std::uint64_t effective_seed() const { return sweep_seed ? *sweep_seed : seed; }

  /// Preset parameters for the current units with particle, numerics and
  /// all overrides applied in order.
  PresetParameters resolved_presets() const;

  /// The configured scenario (custom or preset) with its gauge.
  InterferometerScenario build_scenario() const;
  /// `sources` when given, otherwise the sources of the configured preset.
  SourceConfiguration source_configuration() const;
  GaugeFunction build_gauge(const SourceConfiguration& field) const;
  bool has_scenario() const { return scenario.has_value() || preset.has_value(); }
};

RunConfiguration parse_config_file(const std::string& path);
RunConfiguration parse_config_text(const std::string& text,
                                   const std::string& origin = "<string>");

}  // namespace abqed::cli
