#include "dtdss/plantsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "dtdss/error.hpp"
#include "dtdss/psychro.hpp"

namespace dtdss::plantsim {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Standard normal draw that depends only on (seed, index).
double hashed_gaussian(std::uint64_t seed, std::int64_t index) {
    const std::uint64_t h1 = splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(index)));
    const std::uint64_t h2 = splitmix64(h1);
    const double u1 = (static_cast<double>(h1 >> 11) + 0.5) * 0x1.0p-53;
    const double u2 = static_cast<double>(h2 >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double quantize(double v, double q) { return q > 0.0 ? std::round(v / q) * q : v; }

Segment constant_segment(double start, double end, double value) {
    Segment s;
    s.shape = Segment::Shape::Constant;
    s.start = start;
    s.end = end;
    s.value = value;
    return s;
}

Segment sinusoid_segment(double start, double end, double mean, double amplitude, double phase,
                         double floor = -std::numeric_limits<double>::infinity()) {
    Segment s;
    s.shape = Segment::Shape::Sinusoid;
    s.start = start;
    s.end = end;
    s.value = mean;
    s.amplitude = amplitude;
    s.period = 86400.0;
    s.phase = phase;
    s.floor = floor;
    return s;
}

Segment ramp_segment(double start, double end, double from, double to) {
    Segment s;
    s.shape = Segment::Shape::Ramp;
    s.start = start;
    s.end = end;
    s.value = from;
    s.target = to;
    return s;
}

constexpr double kHour = 3600.0;
constexpr double kDay = 86400.0;

struct Conditions {
    double ambient;
    double ghi;
    double rh;
    double pressure;
    double wind;
};

Conditions conditions_at(const Scenario& sc, double t) {
    return {sc.ambient_temp(t), sc.irradiance(t), sc.relative_humidity(t), sc.pressure(t), sc.wind(t)};
}

Scenario base_scenario(const std::string& name, double duration) {
    Scenario sc;
    sc.name = name;
    sc.start_time = kLibraryStartTime;
    sc.duration = duration;
    sc.ambient_temp = Trajectory::constant(298.15);
    sc.irradiance = Trajectory::constant(0.0);
    sc.relative_humidity = Trajectory::constant(60.0);
    sc.pressure = Trajectory::constant(1013.25);
    sc.wind = Trajectory::constant(1.0);
    return sc;
}

// Warm afternoons, humid nights.
void apply_diurnal_weather(Scenario& sc) {
    sc.ambient_temp = Trajectory({sinusoid_segment(0.0, kDay, 300.0, 3.0, 9.0 * kHour)});
    sc.relative_humidity = Trajectory({sinusoid_segment(0.0, kDay, 70.0, 20.0, 21.0 * kHour)});
}

}  // namespace

double Segment::evaluate(double t) const {
    double v = value;
    switch (shape) {
        case Shape::Constant: break;
        case Shape::Ramp: {
            const double span = end - start;
            const double frac = span > 0.0 ? std::clamp((t - start) / span, 0.0, 1.0) : 1.0;
            v = value + (target - value) * frac;
            break;
        }
        case Shape::Sinusoid: v = value + amplitude * std::sin(2.0 * std::numbers::pi * (t - phase) / period); break;
        case Shape::Step: v = t < at ? value : target; break;
        case Shape::Noise: {
            const auto index = static_cast<std::int64_t>(std::floor((t - start) * rate));
            v = value + amplitude * hashed_gaussian(seed, index);
            break;
        }
    }
    return std::max(v, floor);
}

Trajectory::Trajectory(std::vector<Segment> segments) : segments_(std::move(segments)) {
    if (segments_.empty()) raise(ErrorCode::InvalidInput, "trajectory needs at least one segment");
    std::stable_sort(segments_.begin(), segments_.end(), [](const Segment& a, const Segment& b) { return a.start < b.start; });
    for (const auto& s : segments_) {
        if (!(s.end >= s.start)) raise(ErrorCode::InvalidInput, "segment ends before it starts");
        if (s.shape == Segment::Shape::Sinusoid && !(s.period > 0.0)) raise(ErrorCode::InvalidInput, "sinusoid period must be positive");
        if (s.shape == Segment::Shape::Noise && !(s.rate > 0.0)) raise(ErrorCode::InvalidInput, "noise rate must be positive");
    }
}

Trajectory Trajectory::constant(double value) {
    return Trajectory({constant_segment(0.0, std::numeric_limits<double>::infinity(), value)});
}

double Trajectory::operator()(double t) const {
    if (segments_.empty()) return 0.0;
    if (t < segments_.front().start) return segments_.front().evaluate(segments_.front().start);
    auto it = std::upper_bound(segments_.begin(), segments_.end(), t, [](double x, const Segment& s) { return x < s.start; });
    const Segment& s = *std::prev(it);
    return s.evaluate(std::min(t, s.end));
}

void PlantConfig::validate() const {
    if (!(heat_capacity > 0.0)) raise(ErrorCode::InvalidInput, "heat capacity must be positive");
    if (!(surface_area > 0.0)) raise(ErrorCode::InvalidInput, "surface area must be positive");
    if (!(quantization >= 0.0)) raise(ErrorCode::InvalidInput, "quantization must be >= 0");
    if (!(noise_sigma >= 0.0)) raise(ErrorCode::InvalidInput, "noise sigma must be >= 0");
    if (!(absorptivity > 0.0 && absorptivity <= 1.0)) raise(ErrorCode::InvalidInput, "absorptivity must be in (0, 1]");
    if (!(electrical_power >= 0.0)) raise(ErrorCode::InvalidInput, "electrical power must be >= 0");
    if (!(sample_interval > 0.0)) raise(ErrorCode::InvalidInput, "sample interval must be positive");
    if (!(max_substep >= 0.0)) raise(ErrorCode::InvalidInput, "max substep must be >= 0");
    convection.validate();
}

double plant_convective_coefficient(const PlantConfig& plant, double temperature, double relative_humidity,
                                    double pressure, double wind) {
    const double rho = psychro::moist_air_density({0.0, temperature, relative_humidity, pressure});
    return convective_coefficient(plant.convection, rho, wind);
}

double plant_time_constant(const PlantConfig& plant, double h_c) {
    return plant.heat_capacity / (h_c * plant.surface_area);
}

double plant_self_heating(const PlantConfig& plant, double h_c) {
    return plant.electrical_power / (h_c * plant.surface_area);
}

SimulationResult simulate(const PlantConfig& plant, const Scenario& scenario) {
    plant.validate();
    const double dt = scenario.sample_interval.value_or(plant.sample_interval);
    if (!(dt > 0.0)) raise(ErrorCode::InvalidInput, "sample interval must be positive");
    if (!(scenario.duration > 0.0)) raise(ErrorCode::InvalidInput, "scenario duration must be positive");
    const auto count = static_cast<std::size_t>(std::floor(scenario.duration / dt + 1e-9));

    std::mt19937_64 rng(plant.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    auto observe = [&](double v) {
        double c = v - psychro::kCelsiusOffset;
        if (plant.noise_sigma > 0.0) c += plant.noise_sigma * noise(rng);
        return quantize(c, plant.quantization) + psychro::kCelsiusOffset;
    };
    auto h_c_at = [&](const Conditions& c) {
        return plant_convective_coefficient(plant, c.ambient, c.rh, c.pressure, c.wind);
    };

    const double alpha_area = plant.absorptivity * plant.surface_area;
    SimulationResult result;
    result.samples.reserve(count);
    result.diagnostics.min_tau = std::numeric_limits<double>::infinity();

    // Start in equilibrium with the initial forcing.
    const Conditions c0 = conditions_at(scenario, 0.0);
    const double h0 = h_c_at(c0);
    double t_flux = c0.ambient + (alpha_area * c0.ghi + plant.electrical_power) / (h0 * plant.surface_area);

    for (std::size_t k = 0; k < count; ++k) {
        const double t = static_cast<double>(k) * dt;
        const Conditions c = conditions_at(scenario, t);

        SimulatedSample out;
        out.sample.timestamp = scenario.start_time + t;
        out.sample.reference = {out.sample.timestamp, observe(c.ambient), c.rh, c.pressure};
        out.sample.flux_temp = observe(t_flux);
        out.sample.wind = c.wind;
        out.true_ghi = c.ghi;
        out.true_flux_temp = t_flux;
        result.samples.push_back(out);

        const double tau = std::min(plant_time_constant(plant, h_c_at(c)),
                                    plant_time_constant(plant, h_c_at(conditions_at(scenario, t + dt))));
        result.diagnostics.min_tau = std::min(result.diagnostics.min_tau, tau);
        const double limit = tau / 10.0;
        if (plant.max_substep > limit)
            raise(ErrorCode::Integration, "substep " + std::to_string(plant.max_substep) + " s exceeds tau/10 = " +
                                              std::to_string(limit) + " s");
        const double max_step = plant.max_substep > 0.0 ? plant.max_substep : limit;
        const auto substeps = static_cast<std::size_t>(std::ceil(dt / max_step - 1e-12));
        const double h = dt / static_cast<double>(substeps);

        for (std::size_t j = 0; j < substeps; ++j) {
            // Forcing is frozen at the substep midpoint.
            const Conditions m = conditions_at(scenario, t + (static_cast<double>(j) + 0.5) * h);
            const double hc = h_c_at(m);
            const double loss = hc * plant.surface_area;
            const double source = alpha_area * m.ghi + plant.electrical_power;
            auto rate = [&](double temp) { return (source - loss * (temp - m.ambient)) / plant.heat_capacity; };

            const double k1 = rate(t_flux);
            const double k2 = rate(t_flux + 0.5 * h * k1);
            const double k3 = rate(t_flux + 0.5 * h * k2);
            const double k4 = rate(t_flux + h * k3);
            const double next = t_flux + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

            const double equilibrium = m.ambient + source / loss;
            const double exact = equilibrium + (t_flux - equilibrium) * std::exp(-h * loss / plant.heat_capacity);
            const double largest = std::max({alpha_area * m.ghi, plant.electrical_power, std::abs(loss * (t_flux - m.ambient))});
            if (largest > 0.0) {
                const double residual = plant.heat_capacity * std::abs(next - exact) / (largest * h);
                result.diagnostics.max_energy_residual = std::max(result.diagnostics.max_energy_residual, residual);
            }
            t_flux = next;
            ++result.diagnostics.substeps;
        }
    }
    return result;
}

std::map<std::string, Scenario> scenario_library(std::uint64_t seed) {
    std::map<std::string, Scenario> lib;

    {
        Scenario sc = base_scenario("diurnal_clear", kDay);
        apply_diurnal_weather(sc);
        sc.irradiance = Trajectory({sinusoid_segment(0.0, kDay, 0.0, 800.0, 6.0 * kHour, 0.0)});
        lib.emplace(sc.name, sc);
    }
    {
        Scenario sc = base_scenario("cloud_transients", kDay);
        apply_diurnal_weather(sc);
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> duration(30.0, 300.0);
        std::uniform_real_distribution<double> level(200.0, 800.0);
        std::vector<Segment> segs{constant_segment(0.0, 6.0 * kHour, 0.0)};
        for (double t = 6.0 * kHour; t < 18.0 * kHour;) {
            const double end = std::min(t + duration(rng), 18.0 * kHour);
            segs.push_back(constant_segment(t, end, level(rng)));
            t = end;
        }
        segs.push_back(constant_segment(18.0 * kHour, kDay, 0.0));
        sc.irradiance = Trajectory(std::move(segs));
        lib.emplace(sc.name, sc);
    }
    {
        Scenario sc = base_scenario("altitude_sweep", 2.0 * kHour);
        sc.start_time = kLibraryStartTime + 10.0 * kHour;
        sc.ambient_temp = Trajectory::constant(290.0);
        sc.relative_humidity = Trajectory::constant(50.0);
        sc.irradiance = Trajectory::constant(800.0);
        sc.pressure = Trajectory({constant_segment(0.0, 1200.0, 1013.25), ramp_segment(1200.0, 4800.0, 1013.25, 600.0),
                                  constant_segment(4800.0, 2.0 * kHour, 600.0)});
        lib.emplace(sc.name, sc);
    }
    {
        Scenario sc = base_scenario("dark_room", 2.0 * kHour);
        sc.sample_interval = 1.0;
        lib.emplace(sc.name, sc);
    }
    {
        // Short lamp pulse: the node is still climbing when the lamp goes off,
        // so the maximum marks the cooling onset sharply.
        Scenario sc = base_scenario("step_response", 1800.0);
        sc.sample_interval = 1.0;
        sc.irradiance = Trajectory({constant_segment(0.0, 600.0, 0.0), constant_segment(600.0, 645.0, 1400.0),
                                    constant_segment(645.0, 1800.0, 0.0)});
        lib.emplace(sc.name, sc);
    }
    {
        Scenario sc = base_scenario("gusty", kHour);
        sc.start_time = kLibraryStartTime + 11.0 * kHour;
        sc.sample_interval = 1.0;
        sc.ambient_temp = Trajectory::constant(300.0);
        sc.irradiance = Trajectory::constant(600.0);
        Segment gust;
        gust.shape = Segment::Shape::Noise;
        gust.start = 0.0;
        gust.end = kHour;
        gust.value = 2.0;
        gust.amplitude = 1.0;
        gust.rate = 4.0;
        gust.seed = seed;
        gust.floor = 0.0;
        sc.wind = Trajectory({gust});
        lib.emplace(sc.name, sc);
    }
    return lib;
}

Scenario library_scenario(const std::string& name, std::uint64_t seed) {
    auto lib = scenario_library(seed);
    auto it = lib.find(name);
    if (it == lib.end()) raise(ErrorCode::Usage, "unknown scenario '" + name + "'");
    return it->second;
}

}  // namespace dtdss::plantsim
