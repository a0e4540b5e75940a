#pragma once

namespace dtdss {

struct Site {
    double latitude_deg = 0.0;
    double longitude_deg = 0.0;  // east positive
    double utc_offset_h = 0.0;   // local standard time minus UTC; geometry runs on UTC
};

struct SolarPosition {
    double zenith_deg = 90.0;
    double declination_deg = 0.0;
    double hour_angle_deg = 0.0;
    double equation_of_time_min = 0.0;
};

// Declination / hour-angle geometry from the NOAA solar calculator series
// (mean elements in Julian centuries). Good to about 0.01 deg.
SolarPosition solar_position(const Site& site, double utc_seconds);

// Haurwitz clear-sky GHI for a given cos(zenith); zero at or below the horizon.
double haurwitz_ghi(double cos_zenith);

double clear_sky_ghi(const Site& site, double utc_seconds);

}  // namespace dtdss
