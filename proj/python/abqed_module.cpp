#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>
#include <sstream>

#include "abqed/cli/commands.hpp"
#include "abqed/cli/config.hpp"
#include "abqed/gauge.hpp"
#include "abqed/interferometer.hpp"
#include "abqed/modespace.hpp"
#include "abqed/potentials.hpp"
#include "abqed/sources.hpp"

namespace py = pybind11;
using namespace abqed;

namespace {

UnitSystem parse_units(const std::string& name) {
  if (auto u = cli::units_from_string(name)) return *u;
  throw py::value_error("units must be 'si' or 'reduced'");
}

std::shared_ptr<const FieldModel> make_field(std::vector<SourceElement> elements,
                                             const std::string& units, bool force_quadrature) {
  QuadratureSettings q;
  q.force_quadrature = force_quadrature;
  return std::make_shared<FieldModel>(
      SourceConfiguration(std::move(elements), PhysicalConstants::for_units(parse_units(units))),
      q);
}

py::tuple run_cli(const std::string& command, const std::string& config_text,
                  const std::string& out_dir) {
  auto cfg = config_text.empty() ? cli::RunConfiguration{}
                                 : cli::parse_config_text(config_text, "<python>");
  cfg.out_dir = out_dir;
  std::ostringstream out, err;
  const int code = cli::dispatch(command, cfg, out, err);
  return py::make_tuple(code, out.str(), err.str());
}

}  // namespace

PYBIND11_MODULE(abqed, m) {
  m.doc() = "Aharonov-Bohm phases from quasistatic effective potentials.";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<BadScenarioParameters>(m, "BadScenarioParameters", PyExc_ValueError);
  py::register_exception<SelfEnergyDivergent>(m, "SelfEnergyDivergent", PyExc_ArithmeticError);
  py::register_exception<ConfigParseError>(m, "ConfigParseError", PyExc_ValueError);

  py::class_<PhysicalConstants>(m, "PhysicalConstants")
      .def_static("si", &PhysicalConstants::si)
      .def_static("reduced", &PhysicalConstants::reduced)
      .def_readonly("eps0", &PhysicalConstants::eps0)
      .def_readonly("mu0", &PhysicalConstants::mu0)
      .def_readonly("c", &PhysicalConstants::c)
      .def_readonly("hbar", &PhysicalConstants::hbar);

  py::class_<Particle>(m, "Particle")
      .def(py::init([](double charge, double mass) { return Particle{charge, mass}; }),
           py::arg("charge"), py::arg("mass"))
      .def_readwrite("charge", &Particle::charge)
      .def_readwrite("mass", &Particle::mass);

  py::class_<TimeSchedule>(m, "TimeSchedule")
      .def_static("constant", &TimeSchedule::constant, py::arg("amplitude") = 1.0)
      .def_static("linear_ramp", &TimeSchedule::linear_ramp)
      .def_static("smoothstep_ramp", &TimeSchedule::smoothstep_ramp)
      .def("value", &TimeSchedule::value);

  py::class_<SourceElement>(m, "SourceElement")
      .def_static("point_charge", &SourceElement::point_charge)
      .def_static("gaussian_ball", &SourceElement::gaussian_ball)
      .def_static("charged_shell", &SourceElement::charged_shell)
      .def_static("current_loop", &SourceElement::current_loop, py::arg("current"),
                  py::arg("center"), py::arg("axis"), py::arg("radius"), py::arg("segments") = 256)
      .def_static("finite_solenoid", &SourceElement::finite_solenoid, py::arg("current"),
                  py::arg("center"), py::arg("axis"), py::arg("radius"), py::arg("length"),
                  py::arg("turns_per_meter"), py::arg("loops") = 200, py::arg("segments") = 256)
      .def_static("infinite_solenoid", &SourceElement::infinite_solenoid)
      .def("with_schedule", &SourceElement::with_schedule)
      .def_property_readonly("kind", [](const SourceElement& e) { return to_string(e.kind); })
      .def_readwrite("wire_radius", &SourceElement::wire_radius)
      .def_readwrite("strength", &SourceElement::strength);

  py::class_<EffectiveFieldSample>(m, "FieldSample")
      .def_readonly("V", &EffectiveFieldSample::V)
      .def_readonly("A", &EffectiveFieldSample::A)
      .def("est_error", &EffectiveFieldSample::est_error);

  py::class_<FieldModel, std::shared_ptr<FieldModel>>(m, "FieldModel")
      .def(py::init([](std::vector<SourceElement> elements, const std::string& units,
                       bool force_quadrature) {
             return std::const_pointer_cast<FieldModel>(
                 make_field(std::move(elements), units, force_quadrature));
           }),
           py::arg("elements"), py::arg("units") = "si", py::arg("force_quadrature") = false)
      .def("scalar", &FieldModel::scalar, py::arg("r"), py::arg("t") = 0.0)
      .def("vector", &FieldModel::vector, py::arg("r"), py::arg("t") = 0.0)
      .def("both", &FieldModel::both, py::arg("r"), py::arg("t") = 0.0);

  py::class_<GaugeFunction>(m, "GaugeFunction")
      .def_static("identity", &GaugeFunction::identity)
      .def_static("constant", &GaugeFunction::constant)
      .def_static("linear", &GaugeFunction::linear, py::arg("gradient"), py::arg("rate"),
                  py::arg("offset") = 0.0)
      .def_static("gaussian_bump", &GaugeFunction::gaussian_bump)
      .def_static("sinusoidal", &GaugeFunction::sinusoidal)
      .def_static("time_modulated_product", &GaugeFunction::time_modulated_product)
      .def("value", &GaugeFunction::value)
      .def("gradient", &GaugeFunction::gradient)
      .def("time_derivative", &GaugeFunction::time_derivative)
      .def("static_gradient", &GaugeFunction::static_gradient)
      .def_property_readonly("label", &GaugeFunction::label);

  py::class_<GaugeFamilyBounds>(m, "GaugeFamilyBounds")
      .def_readwrite("feature_size", &GaugeFamilyBounds::feature_size)
      .def_readwrite("amplitude_scale", &GaugeFamilyBounds::amplitude_scale)
      .def_readwrite("t0", &GaugeFamilyBounds::t0)
      .def_readwrite("t1", &GaugeFamilyBounds::t1);
  m.def("random_gauge_family", &random_gauge_family, py::arg("seed"), py::arg("count"),
        py::arg("bounds"));

  py::class_<SolenoidParams>(m, "SolenoidParams")
      .def_readwrite("radius", &SolenoidParams::radius)
      .def_readwrite("turns_per_meter", &SolenoidParams::turns_per_meter)
      .def_readwrite("finite", &SolenoidParams::finite)
      .def_readwrite("length_ratio", &SolenoidParams::length_ratio)
      .def_readwrite("loops", &SolenoidParams::loops)
      .def_readwrite("segments", &SolenoidParams::segments);

  py::class_<CageTimeline>(m, "CageTimeline")
      .def_readwrite("leg_time", &CageTimeline::leg_time)
      .def_readwrite("dwell_time", &CageTimeline::dwell_time)
      .def_property_readonly("t_enter", &CageTimeline::t_enter)
      .def_property_readonly("t_leave", &CageTimeline::t_leave)
      .def_property_readonly("t_final", &CageTimeline::t_final);

  py::class_<MagneticPresetParams>(m, "MagneticPreset")
      .def(py::init([](const std::string& u) { return MagneticPresetParams::defaults(parse_units(u)); }),
           py::arg("units") = "si")
      .def_readwrite("flux", &MagneticPresetParams::flux)
      .def_readwrite("solenoid", &MagneticPresetParams::solenoid)
      .def_readwrite("half_width", &MagneticPresetParams::half_width)
      .def_readwrite("half_height", &MagneticPresetParams::half_height)
      .def_readwrite("duration", &MagneticPresetParams::duration)
      .def_property(
          "force_quadrature", [](const MagneticPresetParams& p) { return p.quadrature.force_quadrature; },
          [](MagneticPresetParams& p, bool v) { p.quadrature.force_quadrature = v; })
      .def("build", &build_magnetic_preset);

  py::class_<ElectricPresetParams>(m, "ElectricPreset")
      .def(py::init([](const std::string& u) { return ElectricPresetParams::defaults(parse_units(u)); }),
           py::arg("units") = "si")
      .def_readwrite("V_a", &ElectricPresetParams::V_a)
      .def_readwrite("V_b", &ElectricPresetParams::V_b)
      .def_readwrite("pulse_start", &ElectricPresetParams::pulse_start)
      .def_readwrite("pulse_end", &ElectricPresetParams::pulse_end)
      .def_readwrite("ramp_time", &ElectricPresetParams::ramp_time)
      .def_readwrite("timeline", &ElectricPresetParams::timeline)
      .def("effective_dwell", &ElectricPresetParams::effective_dwell)
      .def("build", &build_electric_preset);

  py::class_<ElectrodynamicPresetParams>(m, "ElectrodynamicPreset")
      .def(py::init([](const std::string& u) {
             return ElectrodynamicPresetParams::defaults(parse_units(u));
           }),
           py::arg("units") = "si")
      .def_readwrite("flux", &ElectrodynamicPresetParams::flux)
      .def_readwrite("solenoid", &ElectrodynamicPresetParams::solenoid)
      .def_readwrite("ramp_start", &ElectrodynamicPresetParams::ramp_start)
      .def_readwrite("ramp_end", &ElectrodynamicPresetParams::ramp_end)
      .def_readwrite("final_fraction", &ElectrodynamicPresetParams::final_fraction)
      .def_readwrite("timeline", &ElectrodynamicPresetParams::timeline)
      .def("build", &build_electrodynamic_preset);

  py::class_<PathPhase>(m, "PathPhase")
      .def_readonly("phase", &PathPhase::phase)
      .def_readonly("scalar_term", &PathPhase::scalar_term)
      .def_readonly("vector_term", &PathPhase::vector_term)
      .def_readonly("est_error", &PathPhase::est_error);

  py::class_<PhaseResult>(m, "PhaseResult")
      .def_readonly("a", &PhaseResult::a)
      .def_readonly("b", &PhaseResult::b)
      .def_readonly("phi_a", &PhaseResult::phi_a)
      .def_readonly("phi_b", &PhaseResult::phi_b)
      .def_readonly("delta", &PhaseResult::delta)
      .def_readonly("est_error", &PhaseResult::est_error);

  py::class_<PhaseDifference>(m, "PhaseDifference")
      .def_readonly("hamiltonian", &PhaseDifference::hamiltonian)
      .def_readonly("energy", &PhaseDifference::energy)
      .def_readonly("calculator_mismatch", &PhaseDifference::calculator_mismatch)
      .def_readonly("agreement_required", &PhaseDifference::agreement_required);

  py::class_<InterferometerScenario>(m, "Scenario")
      .def_readonly("name", &InterferometerScenario::name)
      .def_readonly("reference_delta", &InterferometerScenario::reference_delta)
      .def_property_readonly("gauge", [](const InterferometerScenario& s) { return s.gauge; })
      .def("with_gauge", &InterferometerScenario::with_gauge)
      .def("open_segment", &InterferometerScenario::open_segment)
      .def("diameter", &InterferometerScenario::diameter)
      .def("family_bounds", &family_bounds_for);

  m.def("phase_difference", &phase_difference, py::arg("scenario"));

  py::class_<SweepSummary>(m, "SweepSummary")
      .def_readonly("lorenz", &SweepSummary::lorenz)
      .def_readonly("max_delta_deviation_hamiltonian",
                    &SweepSummary::max_delta_deviation_hamiltonian)
      .def_readonly("max_delta_deviation_energy", &SweepSummary::max_delta_deviation_energy)
      .def_readonly("max_calculator_mismatch", &SweepSummary::max_calculator_mismatch)
      .def_readonly("per_path_spread", &SweepSummary::per_path_spread)
      .def_property_readonly("count", [](const SweepSummary& s) { return s.rows.size(); });
  m.def("gauge_sweep",
        [](const InterferometerScenario& s, const std::vector<GaugeFunction>& g) {
          return gauge_sweep(s, g);
        },
        py::arg("scenario"), py::arg("gauges"));

  py::class_<KernelIdentityResult>(m, "KernelIdentity")
      .def_readonly("kspace", &KernelIdentityResult::kspace)
      .def_readonly("exact", &KernelIdentityResult::exact)
      .def_readonly("sequence", &KernelIdentityResult::sequence)
      .def("relative_error", &KernelIdentityResult::relative_error);
  m.def("kernel_identity_check", &kernel_identity_check, py::arg("r"), py::arg("k_max"),
        py::arg("levels") = 8);

  m.def(
      "ground_energy_constant",
      [](std::vector<SourceElement> elements, const std::string& units) {
        const SourceConfiguration c(std::move(elements),
                                    PhysicalConstants::for_units(parse_units(units)));
        return ground_energy_constant(c, 0.0).value;
      },
      py::arg("elements"), py::arg("units") = "si");

  m.def(
      "kspace_potentials",
      [](std::vector<SourceElement> elements, const Vec3& r, const std::string& units) {
        const SourceConfiguration c(std::move(elements),
                                    PhysicalConstants::for_units(parse_units(units)));
        return reconstruct_potentials_kspace(c, r, 0.0).field;
      },
      py::arg("elements"), py::arg("r"), py::arg("units") = "si");

  m.def("run_cli", &run_cli, py::arg("command"), py::arg("config") = "",
        py::arg("out_dir") = "abqed_out",
        "Runs an abqed subcommand; returns (exit_code, stdout, stderr).");
}
