// abqed: Aharonov-Bohm phases from coherent-state effective potentials.
//
//   abqed run --preset magnetic --flux 3.9478e-6
//   abqed sweep-gauge --preset magnetic --count 20 --seed 7
//   abqed field-probe --config probe.yaml --out results
//   abqed modespace-check --units reduced
//   abqed convergence
//   abqed presets --units reduced

#include <CLI11.hpp>

#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "abqed/cli/commands.hpp"
#include "abqed/cli/config.hpp"

namespace {

struct Flags {
  std::string config;
  std::string preset;
  std::string out;
  std::string units;
  std::optional<std::uint64_t> seed;
  std::optional<int> count;
  std::map<std::string, std::string> params;
};

void add_common(CLI::App* cmd, Flags& f, bool with_count) {
  cmd->add_option("--config", f.config, "YAML run configuration")->check(CLI::ExistingFile);
  cmd->add_option("--preset", f.preset, "magnetic, electric or electrodynamic")
      ->check(CLI::IsMember({"magnetic", "electric", "electrodynamic"}));
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--seed", f.seed, "seed for gauge families and random probes");
  cmd->add_option("--units", f.units, "si or reduced")->check(CLI::IsMember({"si", "reduced"}));
  if (with_count) cmd->add_option("--count", f.count, "number of random gauges")->check(CLI::PositiveNumber);
  auto* group = cmd->add_option_group("preset parameters");
  for (const auto& p : abqed::cli::preset_parameters()) {
    const std::string name = p.name;
    group->add_option_function<std::string>(
        "--" + name, [&f, name](const std::string& v) { f.params[name] = v; },
        p.help + " (" + p.type + ")");
  }
}

}  // namespace

int main(int argc, char** argv) {
  using namespace abqed::cli;
  CLI::App app{"abqed: Aharonov-Bohm phases from coherent-state effective potentials"};
  app.require_subcommand(1);

  Flags flags;
  const std::map<std::string, std::string> commands{
      {"run", "phase difference of a preset or custom scenario"},
      {"sweep-gauge", "closed-loop phase difference under a seeded gauge family"},
      {"field-probe", "effective potentials at probe points"},
      {"modespace-check", "k-space reconstruction against real-space potentials"},
      {"convergence", "convergence report for potentials, k-space and phases"},
      {"presets", "list presets and their parameters"}};
  for (const auto& [name, help] : commands)
    add_common(app.add_subcommand(name, help), flags, name == "sweep-gauge");

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();

  RunConfiguration cfg;
  try {
    if (!flags.config.empty()) cfg = parse_config_file(flags.config);
    if (!flags.units.empty()) cfg.units = *units_from_string(flags.units);
    if (!flags.preset.empty()) {
      if (cfg.scenario)
        throw abqed::ConfigParseError("--preset conflicts with the configured scenario");
      cfg.preset = preset_from_string(flags.preset);
    }
    for (const auto& [name, value] : flags.params)
      cfg.overrides.push_back({name, value, "--" + name});
    if (!flags.out.empty()) cfg.out_dir = flags.out;
    if (flags.seed) {
      cfg.seed = *flags.seed;
      cfg.sweep_seed = *flags.seed;
    }
    if (flags.count) cfg.sweep_count = *flags.count;
    if (!flags.params.empty() && !cfg.preset)
      throw abqed::ConfigParseError("preset parameter flags need --preset or a preset in the config");
    (void)cfg.resolved_presets();
  } catch (const abqed::ConfigParseError& e) {
    std::cerr << "abqed " << command << ": configuration error: " << e.what() << "\n";
    return exit_config;
  }
  return dispatch(command, cfg, std::cout, std::cerr);
}
