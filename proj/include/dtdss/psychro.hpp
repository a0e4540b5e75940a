#pragma once

// Humid-air thermodynamics from a (pressure, temperature, relative humidity)
// reading. Pressures are hPa everywhere except inside the density formula,
// temperatures are kelvin unless a name says otherwise.

namespace dtdss::psychro {

inline constexpr double kDryAirGasConstant = 287.058;    // J/(kg K)
inline constexpr double kWaterVaporGasConstant = 461.495;  // J/(kg K)
inline constexpr double kEpsilon = kDryAirGasConstant / kWaterVaporGasConstant;
inline constexpr double kMixingRatioFactor = 0.622;
inline constexpr double kCelsiusOffset = 273.15;

// Operational envelope of a reading.
inline constexpr double kMinTemperature = 193.15;
inline constexpr double kMaxTemperature = 353.15;
inline constexpr double kMinPressure = 300.0;
inline constexpr double kMaxPressure = 1100.0;

// Range over which the Magnus-type saturation fit is trusted.
inline constexpr double kSaturationFitMin = 233.15;
inline constexpr double kSaturationFitMax = 323.15;

struct PsychroSample {
    double timestamp = 0.0;          // s since epoch
    double temperature = 0.0;        // K
    double relative_humidity = 0.0;  // %
    double pressure = 0.0;           // hPa

    double temperature_c() const { return temperature - kCelsiusOffset; }
};

struct AirProperties {
    double saturation_vapor_pressure = 0.0;  // hPa
    double vapor_pressure = 0.0;             // hPa
    double dry_partial_pressure = 0.0;       // hPa
    double moist_density = 0.0;              // kg/m^3
    double mixing_ratio = 0.0;               // kg/kg dry air
    double specific_enthalpy = 0.0;          // kJ/kg dry air
    bool out_of_envelope = false;  // reading or saturation fit outside its trusted range
};

bool in_operational_envelope(const PsychroSample& sample);
bool in_saturation_fit_range(double temperature);

// e_s(T) in hPa. Throws InvalidInput for non-finite or T <= 29.65 K.
double saturation_vapor_pressure(double temperature);

// e = e_s(T) * RH / 100. Throws InvalidInput for RH outside [0, 100].
double vapor_pressure(double temperature, double relative_humidity);

double dry_air_density(double pressure_hpa, double temperature);

// Moist-air density in kg/m^3 via the virtual-pressure form.
double moist_air_density(const PsychroSample& sample);

// x = 0.622 e / (P - e). Throws SaturationOverflow when P <= e.
double mixing_ratio(double vapor_pressure_hpa, double pressure_hpa);

// h = 1.006 t + x (2501 + 1.86 t), t in celsius.
double specific_enthalpy(double temperature_c, double mixing_ratio);

// Full derived state; flags rather than rejects out-of-envelope readings.
AirProperties air_properties(const PsychroSample& sample);

}  // namespace dtdss::psychro
