#include <algorithm>
#include <cmath>

#include "dtdss/solar.hpp"
#include "support.hpp"

using namespace dtdss;

namespace {

constexpr double kPi = 3.14159265358979323846;
double rad(double d) { return d * kPi / 180.0; }
double deg(double r) { return r * 180.0 / kPi; }

struct AlmanacSun {
    double zenith_deg;
    double declination_deg;
};

// Low-precision Astronomical Almanac algorithm (ecliptic longitude from mean
// anomaly, sidereal time from the J2000 day count). Good to about 0.01 deg.
AlmanacSun almanac(double lat, double lon, double utc_seconds) {
    const double jd = utc_seconds / 86400.0 + 2440587.5;
    const double n = jd - 2451545.0;
    const double L = std::fmod(280.460 + 0.9856474 * n, 360.0);
    const double g = rad(std::fmod(357.528 + 0.9856003 * n, 360.0));
    const double lambda = rad(L + 1.915 * std::sin(g) + 0.020 * std::sin(2 * g));
    const double eps = rad(23.439 - 0.0000004 * n);
    const double ra = std::atan2(std::cos(eps) * std::sin(lambda), std::cos(lambda));
    const double dec = std::asin(std::sin(eps) * std::sin(lambda));
    const double gmst_h = std::fmod(18.697374558 + 24.06570982441908 * n, 24.0);
    const double ha = rad(gmst_h * 15.0 + lon) - ra;
    const double cosz = std::sin(rad(lat)) * std::sin(dec) + std::cos(rad(lat)) * std::cos(dec) * std::cos(ha);
    return {deg(std::acos(std::clamp(cosz, -1.0, 1.0))), deg(dec)};
}

constexpr double kEquinox2025 = 1742461260.0;  // 2025-03-20T09:01:00Z

}  // namespace

TEST(SolarPosition, DeclinationVanishesAtEquinox) {
    const auto p = solar_position(Site{}, kEquinox2025);
    EXPECT_NEAR(p.declination_deg, 0.0, 0.02);
    EXPECT_NEAR(almanac(0, 0, kEquinox2025).declination_deg, 0.0, 0.05);
}

TEST(SolarPosition, AgreesWithAlmanacAlgorithm) {
    const struct {
        double lat, lon, offset;
    } sites[] = {{0, 0, 0}, {6.9, 79.9, 5.5}, {51.5, -0.1, 0}, {-33.9, 151.2, 10}, {40.0, -105.0, -7}, {64.1, -21.9, 0}};
    int checked = 0;
    for (const auto& s : sites)
        for (double day = 0; day < 365; day += 23)
            for (double hour = 0; hour < 24; hour += 1.5) {
                const double t = 1735689600.0 + day * 86400.0 + hour * 3600.0;  // from 2025-01-01
                const auto oracle = almanac(s.lat, s.lon, t);
                if (oracle.zenith_deg > 85.0) continue;
                const auto p = solar_position({s.lat, s.lon, s.offset}, t);
                EXPECT_NEAR(p.zenith_deg, oracle.zenith_deg, 0.05) << s.lat << " " << s.lon << " day " << day << " h " << hour;
                EXPECT_NEAR(p.declination_deg, oracle.declination_deg, 0.02);
                ++checked;
            }
    EXPECT_GT(checked, 300);
}

TEST(SolarPosition, UtcOffsetDoesNotMoveTheSun) {
    const double t = kEquinox2025 + 3 * 3600.0;
    const auto a = solar_position({6.9, 79.9, 0.0}, t);
    const auto b = solar_position({6.9, 79.9, 5.5}, t);
    EXPECT_EQ(a.zenith_deg, b.zenith_deg);
}

TEST(SolarPosition, EquationOfTimeExtremes) {
    // Early November maximum near +16.4 min, mid-February minimum near -14.2 min.
    EXPECT_NEAR(solar_position(Site{}, 1730678400.0).equation_of_time_min, 16.4, 0.2);  // 2024-11-04
    EXPECT_NEAR(solar_position(Site{}, 1739318400.0).equation_of_time_min, -14.2, 0.2);  // 2025-02-12
}

TEST(Haurwitz, Values) {
    EXPECT_NEAR(haurwitz_ghi(1.0), 1098.0 * std::exp(-0.057), 1e-9);
    EXPECT_NEAR(haurwitz_ghi(1.0), 1037.2, 0.1);
    EXPECT_EQ(haurwitz_ghi(0.0), 0.0);
    EXPECT_EQ(haurwitz_ghi(-0.3), 0.0);
}

TEST(ClearSky, ZeroAtNightAndPeakAtEquatorialNoon) {
    EXPECT_EQ(clear_sky_ghi(Site{}, kEquinox2025 - 9 * 3600.0), 0.0);  // local midnight at lon 0
    // Equator, equinox, solar noon (mean noon corrected by the equation of time).
    const double mean_noon = 1742472000.0;  // 2025-03-20T12:00:00Z
    const double noon = mean_noon - 60.0 * solar_position(Site{}, mean_noon).equation_of_time_min;
    const auto p = solar_position(Site{}, noon);
    EXPECT_NEAR(p.zenith_deg, 0.0, 0.1);
    EXPECT_NEAR(clear_sky_ghi(Site{}, noon), 1037.0, 1.0);
}
