#include "dtdss/solar.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace dtdss {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

}  // namespace

SolarPosition solar_position(const Site& site, double utc_seconds) {
    // Julian centuries since J2000.0.
    const double jd = utc_seconds / 86400.0 + 2440587.5;
    const double t = (jd - 2451545.0) / 36525.0;

    const double l0 = std::fmod(280.46646 + t * (36000.76983 + 0.0003032 * t), 360.0);
    const double m = (357.52911 + t * (35999.05029 - 0.0001537 * t)) * kDeg;
    const double e = 0.016708634 - t * (0.000042037 + 0.0000001267 * t);
    const double centre = std::sin(m) * (1.914602 - t * (0.004817 + 0.000014 * t)) +
                          std::sin(2 * m) * (0.019993 - 0.000101 * t) + std::sin(3 * m) * 0.000289;
    const double omega = (125.04 - 1934.136 * t) * kDeg;
    const double apparent = (l0 + centre - 0.00569 - 0.00478 * std::sin(omega)) * kDeg;
    const double mean_obliquity = 23.0 + (26.0 + (21.448 - t * (46.815 + t * (0.00059 - t * 0.001813))) / 60.0) / 60.0;
    const double obliquity = (mean_obliquity + 0.00256 * std::cos(omega)) * kDeg;

    const double decl = std::asin(std::sin(obliquity) * std::sin(apparent));
    const double y = std::pow(std::tan(obliquity / 2.0), 2);
    const double l0r = l0 * kDeg;
    const double eot = y * std::sin(2 * l0r) - 2 * e * std::sin(m) + 4 * e * y * std::sin(m) * std::cos(2 * l0r) -
                       0.5 * y * y * std::sin(4 * l0r) - 1.25 * e * e * std::sin(2 * m);

    SolarPosition p;
    p.declination_deg = decl / kDeg;
    p.equation_of_time_min = 4.0 * eot / kDeg;

    // True solar time in minutes, from UTC and longitude alone.
    const double utc_min = std::fmod(std::fmod(utc_seconds, 86400.0) + 86400.0, 86400.0) / 60.0;
    const double solar_min = utc_min + p.equation_of_time_min + 4.0 * site.longitude_deg;
    p.hour_angle_deg = std::remainder(solar_min / 4.0 - 180.0, 360.0);

    const double lat = site.latitude_deg * kDeg;
    const double cos_z =
        std::sin(lat) * std::sin(decl) + std::cos(lat) * std::cos(decl) * std::cos(p.hour_angle_deg * kDeg);
    p.zenith_deg = std::acos(std::clamp(cos_z, -1.0, 1.0)) / kDeg;
    return p;
}

double haurwitz_ghi(double cos_zenith) {
    if (cos_zenith <= 0.0) return 0.0;
    return 1098.0 * cos_zenith * std::exp(-0.057 / cos_zenith);
}

double clear_sky_ghi(const Site& site, double utc_seconds) {
    const auto p = solar_position(site, utc_seconds);
    if (p.zenith_deg >= 90.0) return 0.0;
    return haurwitz_ghi(std::cos(p.zenith_deg * kDeg));
}

}  // namespace dtdss
