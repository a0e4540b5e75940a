#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "dtdss/calib.hpp"
#include "dtdss/cli.hpp"
#include "dtdss/convection.hpp"
#include "dtdss/error.hpp"
#include "dtdss/fixedpoint.hpp"
#include "dtdss/flux.hpp"
#include "dtdss/inr.hpp"
#include "dtdss/io.hpp"
#include "dtdss/plantsim.hpp"
#include "dtdss/psychro.hpp"
#include "dtdss/solar.hpp"

namespace py = pybind11;
using namespace dtdss;

namespace {

flux::DifferentialSample make_sample(double timestamp, double t_ref, double rh, double pressure, double t_flux,
                                     std::optional<double> wind) {
    flux::DifferentialSample s;
    s.timestamp = timestamp;
    s.reference = {timestamp, t_ref, rh, pressure};
    s.flux_temp = t_flux;
    s.wind = wind;
    return s;
}

// Columns of a simulated run, temperatures in kelvin.
py::dict simulation_columns(const plantsim::SimulationResult& r) {
    std::vector<double> t, t_ref, rh, p, t_flux, wind, g;
    for (const auto& x : r.samples) {
        t.push_back(x.sample.timestamp);
        t_ref.push_back(x.sample.reference.temperature);
        rh.push_back(x.sample.reference.relative_humidity);
        p.push_back(x.sample.reference.pressure);
        t_flux.push_back(x.sample.flux_temp);
        wind.push_back(x.sample.wind.value_or(0.0));
        g.push_back(x.true_ghi);
    }
    py::dict d;
    d["timestamp"] = t;
    d["t_ref"] = t_ref;
    d["rh"] = rh;
    d["pressure"] = p;
    d["t_flux"] = t_flux;
    d["wind"] = wind;
    d["g_true"] = g;
    return d;
}

// The integer pipeline plus the params its slow path encodes with.
struct FixedRunner {
    flux::ReconstructionParams params;
    fixedpoint::FixedPipeline pipeline;

    FixedRunner(const flux::ReconstructionParams& p, double dt) : params(p), pipeline(p, dt) {}
};

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Differential-temperature solar irradiance soft sensor";

    // Leaked on purpose: the translator may run during interpreter teardown.
    static PyObject* error_type = PyErr_NewException("dtdss._core.DtdssError", PyExc_RuntimeError, nullptr);
    m.attr("DtdssError") = py::handle(error_type);
    py::register_exception_translator([](std::exception_ptr p) {
        try {
            if (p) std::rethrow_exception(p);
        } catch (const dtdss::Error& e) {
            py::object exc = py::reinterpret_steal<py::object>(PyObject_CallFunction(error_type, "s", e.what()));
            exc.attr("code") = to_string(e.code());
            PyErr_SetObject(error_type, exc.ptr());
        }
    });

    // psychrometrics
    py::class_<psychro::AirProperties>(m, "AirProperties")
        .def_readonly("saturation_vapor_pressure", &psychro::AirProperties::saturation_vapor_pressure)
        .def_readonly("vapor_pressure", &psychro::AirProperties::vapor_pressure)
        .def_readonly("dry_partial_pressure", &psychro::AirProperties::dry_partial_pressure)
        .def_readonly("moist_density", &psychro::AirProperties::moist_density)
        .def_readonly("mixing_ratio", &psychro::AirProperties::mixing_ratio)
        .def_readonly("specific_enthalpy", &psychro::AirProperties::specific_enthalpy)
        .def_readonly("out_of_envelope", &psychro::AirProperties::out_of_envelope);

    m.def("saturation_vapor_pressure", &psychro::saturation_vapor_pressure, py::arg("temperature"));
    m.def("vapor_pressure", &psychro::vapor_pressure, py::arg("temperature"), py::arg("relative_humidity"));
    m.def("dry_air_density", &psychro::dry_air_density, py::arg("pressure_hpa"), py::arg("temperature"));
    m.def(
        "air_properties",
        [](double temperature, double rh, double pressure) {
            return psychro::air_properties({0.0, temperature, rh, pressure});
        },
        py::arg("temperature"), py::arg("relative_humidity"), py::arg("pressure_hpa"));

    m.def(
        "convective_coefficient",
        [](double rho, std::optional<double> wind, double h_ref, double rho_ref, double wind_ref, double wind_floor) {
            return convective_coefficient(ConvectionModel{h_ref, rho_ref, wind_ref, wind_floor}, rho, wind);
        },
        py::arg("rho"), py::arg("wind") = py::none(), py::arg("h_ref") = 50.0, py::arg("rho_ref") = 1.2,
        py::arg("wind_ref") = 1.0, py::arg("wind_floor") = 0.5);

    m.def(
        "clear_sky_ghi",
        [](double lat, double lon, double timestamp) { return clear_sky_ghi({lat, lon, 0.0}, timestamp); },
        py::arg("lat_deg"), py::arg("lon_deg"), py::arg("timestamp"));

    // reconstruction
    py::class_<flux::ReconstructionParams>(m, "Params")
        .def(py::init<>())
        .def_static("load", &io::load_params, py::arg("path"))
        .def_readwrite("absorptivity", &flux::ReconstructionParams::absorptivity)
        .def_readwrite("tau", &flux::ReconstructionParams::tau)
        .def_readwrite("t_rise", &flux::ReconstructionParams::t_rise)
        .def_readwrite("gain", &flux::ReconstructionParams::gain)
        .def_readwrite("cloud_exponent", &flux::ReconstructionParams::cloud_exponent)
        .def_readwrite("density_scaling", &flux::ReconstructionParams::density_scaling)
        .def_property(
            "hc_ref", [](const flux::ReconstructionParams& p) { return p.convection.h_c_reference; },
            [](flux::ReconstructionParams& p, double v) { p.convection.h_c_reference = v; })
        .def_property(
            "alpha_min", [](const flux::ReconstructionParams& p) { return p.inr.alpha_min; },
            [](flux::ReconstructionParams& p, double v) { p.inr.alpha_min = v; })
        .def_property(
            "alpha_max", [](const flux::ReconstructionParams& p) { return p.inr.alpha_max; },
            [](flux::ReconstructionParams& p, double v) { p.inr.alpha_max = v; })
        .def_property(
            "jerk_gain", [](const flux::ReconstructionParams& p) { return p.inr.jerk_gain; },
            [](flux::ReconstructionParams& p, double v) { p.inr.jerk_gain = v; })
        .def("validate", &flux::ReconstructionParams::validate);

    py::class_<flux::FluxEstimate>(m, "Estimate")
        .def_readonly("timestamp", &flux::FluxEstimate::timestamp)
        .def_readonly("ghi", &flux::FluxEstimate::ghi)
        .def_readonly("ghi_raw", &flux::FluxEstimate::ghi_raw)
        .def_readonly("sol_air_excess", &flux::FluxEstimate::sol_air_excess)
        .def_readonly("baseline_ghi", &flux::FluxEstimate::baseline_ghi)
        .def_readonly("clear_sky_ghi", &flux::FluxEstimate::clear_sky_ghi)
        .def_readonly("convective_coefficient", &flux::FluxEstimate::convective_coefficient)
        .def_property_readonly("flags", [](const flux::FluxEstimate& e) { return e.flags.to_string(); })
        .def("__repr__", [](const flux::FluxEstimate& e) {
            std::ostringstream s;
            s << "<Estimate t=" << e.timestamp << " ghi=" << e.ghi << " flags='" << e.flags.to_string() << "'>";
            return s.str();
        });

    py::class_<flux::Pipeline>(m, "Pipeline")
        .def(py::init<const flux::ReconstructionParams&>(), py::arg("params"))
        .def(
            "step",
            [](flux::Pipeline& p, double timestamp, double t_ref, double rh, double pressure, double t_flux,
               std::optional<double> wind) { return p.step(make_sample(timestamp, t_ref, rh, pressure, t_flux, wind)); },
            py::arg("timestamp"), py::arg("t_ref"), py::arg("rh"), py::arg("pressure"), py::arg("t_flux"),
            py::arg("wind") = py::none(),
            "Advance one sample (temperatures in kelvin). Returns None while the derivative window fills.")
        .def_property_readonly("cloud_exponent", &flux::Pipeline::cloud_exponent);

    py::class_<FixedRunner>(m, "FixedPipeline")
        .def(py::init<const flux::ReconstructionParams&, double>(), py::arg("params"), py::arg("sample_interval"))
        .def(
            "step",
            [](FixedRunner& f, double timestamp, double t_ref, double rh, double pressure, double t_flux,
               std::optional<double> wind) -> std::optional<int> {
                const auto s = make_sample(timestamp, t_ref, rh, pressure, t_flux, wind);
                const auto out = f.pipeline.step(fixedpoint::FixedPipeline::encode(f.params, s));
                if (!out) return std::nullopt;
                return out->ghi;
            },
            py::arg("timestamp"), py::arg("t_ref"), py::arg("rh"), py::arg("pressure"), py::arg("t_flux"),
            py::arg("wind") = py::none(), "Integer GHI in W/m^2, or None while the window fills.")
        .def("state_bytes", [](const FixedRunner& f) {
            const auto b = f.pipeline.state().serialize();
            return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
        });

    py::class_<inr::InrOutput>(m, "InrOutput")
        .def_readonly("timestamp", &inr::InrOutput::timestamp)
        .def_readonly("filtered_temp", &inr::InrOutput::filtered_temp)
        .def_readonly("derivative", &inr::InrOutput::derivative)
        .def_readonly("projected_temp", &inr::InrOutput::projected_temp)
        .def_readonly("alpha_used", &inr::InrOutput::alpha_used);

    py::class_<inr::InertialFilter>(m, "InertialFilter")
        .def(py::init([](double alpha_min, double alpha_max, double jerk_gain, double tau) {
                 inr::InrConfig c;
                 c.alpha_min = alpha_min;
                 c.alpha_max = alpha_max;
                 c.jerk_gain = jerk_gain;
                 c.tau = tau;
                 return inr::InertialFilter(c);
             }),
             py::arg("alpha_min") = 0.05, py::arg("alpha_max") = 0.5, py::arg("jerk_gain") = 0.4, py::arg("tau") = 30.0)
        .def("step", &inr::InertialFilter::step, py::arg("raw"), py::arg("timestamp"));

    // calibration and metrics
    m.def(
        "fit_gain", [](const std::vector<double>& est, const std::vector<double>& ref) { return calib::fit_gain(est, ref).gain; },
        py::arg("estimates"), py::arg("references"));
    m.def(
        "mape",
        [](const std::vector<double>& ref, const std::vector<double>& est, double min_reference) {
            return calib::mape(ref, est, min_reference).percent;
        },
        py::arg("references"), py::arg("estimates"), py::arg("min_reference") = calib::kMapeMinReference);
    m.def(
        "rmse", [](const std::vector<double>& ref, const std::vector<double>& est) { return calib::rmse(ref, est); },
        py::arg("references"), py::arg("estimates"));
    m.def(
        "r_squared",
        [](const std::vector<double>& ref, const std::vector<double>& est) { return calib::r_squared(ref, est); },
        py::arg("references"), py::arg("estimates"));

    // simulation
    m.def("scenario_names", [] {
        std::vector<std::string> names;
        for (const auto& [name, s] : plantsim::scenario_library()) names.push_back(name);
        return names;
    });
    m.def(
        "simulate",
        [](const std::string& scenario, std::uint64_t seed, std::uint64_t scenario_seed) {
            plantsim::PlantConfig plant;
            plant.seed = seed;
            return simulation_columns(plantsim::simulate(plant, plantsim::library_scenario(scenario, scenario_seed)));
        },
        py::arg("scenario"), py::arg("seed") = 1, py::arg("scenario_seed") = 7);

    m.def(
        "run_cli",
        [](const std::vector<std::string>& args) {
            std::ostringstream out, err;
            const int code = cli::run(args, out, err);
            return py::make_tuple(code, out.str(), err.str());
        },
        py::arg("args"), "Run the command-line tool in-process; returns (exit_code, stdout, stderr).");
}
