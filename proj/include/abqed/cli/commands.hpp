#pragma once

// Subcommands of the abqed tool. Each writes its CSV and JSON artifacts into
// config.out_dir and prints a summary table to `out`. CSV files start with a
// versioned header comment and contain no timing data, so identical
// configurations and seeds produce identical bytes.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "abqed/cli/config.hpp"

namespace abqed::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_config = 1,         // bad configuration or usage
  exit_not_converged = 2,  // quadrature or phase tolerance not reached
  exit_invariant = 3,      // invariant violation (gauge, calculators, mode space)
  exit_failure = 4         // any other library error
};

inline constexpr const char* csv_version = "1";

int cmd_run(const RunConfiguration& cfg, std::ostream& out, std::ostream& err);
int cmd_sweep_gauge(const RunConfiguration& cfg, std::ostream& out, std::ostream& err);
int cmd_field_probe(const RunConfiguration& cfg, std::ostream& out, std::ostream& err);
int cmd_modespace_check(const RunConfiguration& cfg, std::ostream& out, std::ostream& err);
int cmd_convergence(const RunConfiguration& cfg, std::ostream& out, std::ostream& err);
int cmd_presets(const RunConfiguration& cfg, std::ostream& out, std::ostream& err);

/// Runs a subcommand by name, mapping library errors to exit codes.
int dispatch(const std::string& command, const RunConfiguration& cfg, std::ostream& out,
             std::ostream& err);

/// One warning per ramped source whose ramp is shorter than
/// 100 * diameter / c.
std::vector<std::string> adiabaticity_warnings(const SourceConfiguration& config,
                                               double diameter);

/// Reference sources of the mode-space checks: point charge, Gaussian ball,
/// charged shell, current loop and a short finite solenoid, each centered at
/// the origin with unit length scale.
struct NamedSource {
  std::string name;
  SourceConfiguration config;
  double scale = 1.0;
};
std::vector<NamedSource> modespace_reference_sources(UnitSystem units);

/// Seeded probe points at distance [0.2, 3] * scale from the origin, kept
/// 0.1 * scale away from singular supports.
std::vector<Vec3> modespace_probe_points(const SourceConfiguration& config, double scale,
                                         int count, std::uint64_t seed);

struct ModespaceProbe {
  Vec3 r = Vec3::Zero();
  EffectiveFieldSample real;
  KSpaceSample kspace;
  double rel_error_V = 0.0;
  double rel_error_A = 0.0;  // 0 when both are zero
};

ModespaceProbe compare_modespace(const SourceConfiguration& config, const FieldModel& real,
                                 const Vec3& r, const KSpaceSettings& settings);

/// Largest |lambda_3| / |lambda| over `count` seeded wavevectors with
/// |k| in [0.5, 20] / scale.
double max_longitudinal_fraction(const SourceConfiguration& config, double scale, int count,
                                 std::uint64_t seed,
                                 TransformMethod method = TransformMethod::analytic);

}  // namespace abqed::cli
