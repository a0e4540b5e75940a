#include "dtdss/psychro.hpp"

#include <cmath>
#include <string>

#include "dtdss/error.hpp"

namespace dtdss::psychro {
namespace {

void require_finite(double v, const char* what) {
    if (!std::isfinite(v)) raise(ErrorCode::InvalidInput, std::string(what) + " is not finite");
}

void validate_sample(const PsychroSample& s) {
    require_finite(s.temperature, "temperature");
    require_finite(s.relative_humidity, "relative humidity");
    require_finite(s.pressure, "pressure");
    if (s.temperature <= 0.0) raise(ErrorCode::InvalidInput, "temperature must be positive kelvin");
    if (s.pressure <= 0.0) raise(ErrorCode::InvalidInput, "pressure must be positive");
}

}  // namespace

bool in_operational_envelope(const PsychroSample& s) {
    return s.temperature >= kMinTemperature && s.temperature <= kMaxTemperature &&
           s.relative_humidity >= 0.0 && s.relative_humidity <= 100.0 && s.pressure >= kMinPressure &&
           s.pressure <= kMaxPressure;
}

bool in_saturation_fit_range(double temperature) {
    return temperature >= kSaturationFitMin && temperature <= kSaturationFitMax;
}

double saturation_vapor_pressure(double temperature) {
    require_finite(temperature, "temperature");
    // Pole of the fit at 29.65 K; nothing physical lives below it.
    if (temperature <= 29.65) raise(ErrorCode::InvalidInput, "temperature below saturation fit pole");
    return 6.112 * std::exp(17.67 * (temperature - kCelsiusOffset) / (temperature - 29.65));
}

double vapor_pressure(double temperature, double relative_humidity) {
    require_finite(relative_humidity, "relative humidity");
    if (relative_humidity < 0.0 || relative_humidity > 100.0)
        raise(ErrorCode::InvalidInput, "relative humidity outside [0, 100]");
    return saturation_vapor_pressure(temperature) * (relative_humidity / 100.0);
}

double dry_air_density(double pressure_hpa, double temperature) {
    return pressure_hpa * 100.0 / (kDryAirGasConstant * temperature);
}

double moist_air_density(const PsychroSample& s) {
    validate_sample(s);
    const double e = vapor_pressure(s.temperature, s.relative_humidity);
    return dry_air_density(s.pressure, s.temperature) * (1.0 - (e / s.pressure) * (1.0 - kEpsilon));
}

double mixing_ratio(double vapor_pressure_hpa, double pressure_hpa) {
    require_finite(vapor_pressure_hpa, "vapor pressure");
    require_finite(pressure_hpa, "pressure");
    if (vapor_pressure_hpa < 0.0) raise(ErrorCode::InvalidInput, "negative vapor pressure");
    if (pressure_hpa <= vapor_pressure_hpa)
        raise(ErrorCode::SaturationOverflow, "vapor pressure reaches total pressure");
    return kMixingRatioFactor * vapor_pressure_hpa / (pressure_hpa - vapor_pressure_hpa);
}

double specific_enthalpy(double temperature_c, double x) {
    return 1.006 * temperature_c + x * (2501.0 + 1.86 * temperature_c);
}

AirProperties air_properties(const PsychroSample& s) {
    validate_sample(s);
    AirProperties a;
    a.saturation_vapor_pressure = saturation_vapor_pressure(s.temperature);
    a.vapor_pressure = vapor_pressure(s.temperature, s.relative_humidity);
    a.dry_partial_pressure = s.pressure - a.vapor_pressure;
    a.moist_density = moist_air_density(s);
    a.mixing_ratio = mixing_ratio(a.vapor_pressure, s.pressure);
    a.specific_enthalpy = specific_enthalpy(s.temperature_c(), a.mixing_ratio);
    a.out_of_envelope = !in_operational_envelope(s) || !in_saturation_fit_range(s.temperature);
    return a;
}

}  // namespace dtdss::psychro
