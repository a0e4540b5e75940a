#pragma once

#include <optional>

namespace dtdss {

// Square-root scaling of the convective coefficient with the density-wind
// product, anchored at a calibration point. The Nusselt correlation constants
// live inside h_c_reference.
struct ConvectionModel {
    double h_c_reference = 50.0;  // W/(m^2 K) at the reference point
    double rho_reference = 1.2;   // kg/m^3
    double wind_reference = 1.0;  // m/s
    double wind_floor = 0.5;      // m/s, stands in for natural convection

    // Throws InvalidInput when a field is non-positive or floor > reference.
    void validate() const;

    // rho * max(wind, floor) / wind_reference, the quantity h_c scales with
    // as sqrt(drive / rho_reference). Missing wind means wind_reference.
    double drive(double rho, std::optional<double> wind) const;
};

// h_c = h_ref * sqrt(rho V / (rho_ref V_ref)), V clamped up to wind_floor.
double convective_coefficient(const ConvectionModel& model, double rho, std::optional<double> wind = std::nullopt);

// q = h_c (T_s - T_inf), signed.
double convective_flux(double h_c, double surface_temp, double ambient_temp);

}  // namespace dtdss
