#include "dtdss/convection.hpp"

#include <algorithm>
#include <cmath>

#include "dtdss/error.hpp"

namespace dtdss {

void ConvectionModel::validate() const {
    const bool positive = h_c_reference > 0.0 && rho_reference > 0.0 && wind_reference > 0.0 && wind_floor > 0.0;
    if (!positive) raise(ErrorCode::InvalidInput, "convection model fields must be strictly positive");
    if (wind_floor > wind_reference) raise(ErrorCode::InvalidInput, "wind floor exceeds wind reference");
}

double ConvectionModel::drive(double rho, std::optional<double> wind) const {
    if (!(rho > 0.0) || !std::isfinite(rho)) raise(ErrorCode::InvalidInput, "density must be positive");
    double v = wind_reference;
    if (wind) {
        if (!std::isfinite(*wind) || *wind < 0.0) raise(ErrorCode::InvalidInput, "wind must be finite and >= 0");
        v = std::max(*wind, wind_floor);
    }
    const double d = rho * v / wind_reference;
    if (!std::isfinite(d)) raise(ErrorCode::InvalidInput, "convective drive overflows");
    return d;
}

double convective_coefficient(const ConvectionModel& model, double rho, std::optional<double> wind) {
    return model.h_c_reference * std::sqrt(model.drive(rho, wind) / model.rho_reference);
}

double convective_flux(double h_c, double surface_temp, double ambient_temp) {
    if (h_c < 0.0) raise(ErrorCode::InvalidInput, "negative convective coefficient");
    return h_c * (surface_temp - ambient_temp);
}

}  // namespace dtdss
