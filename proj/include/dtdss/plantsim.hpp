#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dtdss/convection.hpp"
#include "dtdss/flux.hpp"

namespace dtdss::plantsim {

// One piece of a scalar trajectory, active on [start, end).
struct Segment {
    enum class Shape { Constant, Ramp, Sinusoid, Step, Noise };

    Shape shape = Shape::Constant;
    double start = 0.0;  // s relative to scenario start
    double end = 0.0;
    double value = 0.0;      // constant level, ramp start, step level before, sinusoid/noise mean
    double target = 0.0;     // ramp end, step level after
    double amplitude = 0.0;  // sinusoid amplitude, noise standard deviation
    double period = 86400.0;
    double phase = 0.0;      // s; sinusoid crosses its mean upward at t = phase
    double at = 0.0;         // step time
    double rate = 1.0;       // noise: independent draws per second
    std::uint64_t seed = 0;  // noise
    double floor = -std::numeric_limits<double>::infinity();  // lower clip

    double evaluate(double t) const;
};

// Piecewise trajectory. Before the first segment the trajectory holds the
// first segment's start value; after the last it holds the last one's end
// value.
class Trajectory {
public:
    Trajectory() = default;
    explicit Trajectory(std::vector<Segment> segments);
    static Trajectory constant(double value);

    double operator()(double t) const;
    const std::vector<Segment>& segments() const { return segments_; }

private:
    std::vector<Segment> segments_;  // sorted by start
};

struct Scenario {
    std::string name;
    double start_time = 0.0;  // UTC epoch seconds of t = 0
    double duration = 0.0;    // s
    std::optional<double> sample_interval;  // overrides the plant's when set
    Trajectory ambient_temp;       // K
    Trajectory irradiance;         // W/m^2, the true G
    Trajectory relative_humidity;  // %
    Trajectory pressure;           // hPa
    Trajectory wind;               // m/s
};

struct PlantConfig {
    double absorptivity = 0.90;
    double surface_area = 50e-6;      // m^2
    double heat_capacity = 1.0;       // J/K
    double electrical_power = 0.035;  // W
    ConvectionModel convection{700.0, 1.2, 1.0, 0.5};
    double quantization = 0.01;  // K, sensor resolution, 0 disables
    double noise_sigma = 0.005;  // K, additive Gaussian, 0 disables
    double sample_interval = 10.0;  // s
    std::uint64_t seed = 1;
    double max_substep = 0.0;  // s, 0 picks tau / 10 automatically

    void validate() const;
};

struct SimulatedSample {
    flux::DifferentialSample sample;
    double true_ghi = 0.0;
    double true_flux_temp = 0.0;  // K, before quantization and noise
};

struct SimulationDiagnostics {
    std::size_t substeps = 0;
    // Largest |RK4 increment - exact frozen-coefficient increment| * m C_p,
    // relative to the largest power term times the substep length.
    double max_energy_residual = 0.0;
    double min_tau = 0.0;  // s
};

struct SimulationResult {
    std::vector<SimulatedSample> samples;
    SimulationDiagnostics diagnostics;
};

// h_c of the plant for given ambient conditions.
double plant_convective_coefficient(const PlantConfig& plant, double temperature, double relative_humidity,
                                    double pressure, double wind);
// m C_p / (h_c A_s) and P_elec / (h_c A_s) at given conditions.
double plant_time_constant(const PlantConfig& plant, double h_c);
double plant_self_heating(const PlantConfig& plant, double h_c);

// Forward-integrates the flux-node energy balance with RK4 at sub-sample
// resolution and emits quantized dual-node telemetry.
SimulationResult simulate(const PlantConfig& plant, const Scenario& scenario);

// Named archetypes: diurnal_clear, cloud_transients, altitude_sweep,
// dark_room, step_response, gusty.
std::map<std::string, Scenario> scenario_library(std::uint64_t seed = 7);
Scenario library_scenario(const std::string& name, std::uint64_t seed = 7);

inline constexpr double kLibraryStartTime = 1742428800.0;  // 2025-03-20T00:00:00Z

}  // namespace dtdss::plantsim
