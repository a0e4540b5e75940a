#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <string_view>

#include "dtdss/convection.hpp"
#include "dtdss/inr.hpp"
#include "dtdss/psychro.hpp"
#include "dtdss/solar.hpp"

namespace dtdss::flux {

enum class Flag : std::uint8_t {
    ExceedsClearSky = 1u << 0,
    PathDisagreement = 1u << 1,
    NodeInversion = 1u << 2,
    Clamped = 1u << 3,
    OutOfEnvelope = 1u << 4,
    Saturated = 1u << 5,  // fixed-point mirror only
};

class FlagSet {
public:
    constexpr FlagSet() = default;
    constexpr explicit FlagSet(std::uint8_t bits) : bits_(bits) {}

    constexpr bool has(Flag f) const { return (bits_ & static_cast<std::uint8_t>(f)) != 0; }
    constexpr void set(Flag f) { bits_ |= static_cast<std::uint8_t>(f); }
    constexpr bool empty() const { return bits_ == 0; }
    constexpr std::uint8_t bits() const { return bits_; }
    constexpr bool operator==(const FlagSet&) const = default;

    // '|'-joined names in declaration order, empty string for no flags.
    std::string to_string() const;
    // Inverse of to_string; throws InvalidInput on an unknown name.
    static FlagSet parse(std::string_view text);

private:
    std::uint8_t bits_ = 0;
};

std::string_view flag_name(Flag f);

inline constexpr double kGhiCeiling = 1400.0;
inline constexpr double kClearSkyMargin = 1.2;
inline constexpr double kDisagreementFraction = 0.5;
inline constexpr double kDaylightZenithDeg = 85.0;
inline constexpr double kCloudFeedbackZenithDeg = 80.0;
inline constexpr double kStableSlope = 0.005;  // K/s
inline constexpr double kStableDuration = 60.0;  // s
inline constexpr double kMinCloudExponent = 1.0;
inline constexpr double kMaxCloudExponent = 3.0;

struct DifferentialSample {
    psychro::PsychroSample reference;
    double flux_temp = 0.0;  // K
    std::optional<double> wind;  // m/s
    double timestamp = 0.0;
};

struct ReconstructionParams {
    double absorptivity = 0.90;
    double tau = 30.0;     // s, at the convection reference point
    double t_rise = 1.0;   // K, at the convection reference point
    double gain = 1.0;
    ConvectionModel convection;
    double cloud_exponent = 1.5;
    Site site;
    inr::InrConfig inr;  // tau inside is overridden by `tau`
    bool density_scaling = true;
    bool adapt_cloud_exponent = false;
    double cloud_learning_rate = 0.01;

    void validate() const;
};

struct FluxEstimate {
    double timestamp = 0.0;
    double ghi = 0.0;
    double ghi_raw = 0.0;
    double sol_air_excess = 0.0;
    double baseline_ghi = 0.0;
    double clear_sky_ghi = 0.0;
    FlagSet flags;

    // Diagnostics behind the flags.
    double delta_t = 0.0;  // unfiltered T_flux - T_ref at `timestamp`
    double filtered_delta_t = 0.0;
    double derivative = 0.0;
    double convective_coefficient = 0.0;
    double zenith_deg = 90.0;
    double cloud_exponent = 0.0;
    double cloud_proxy = 0.0;
    bool daylight = false;
    bool stable = false;
};

// T_sol = dT + tau dT/dt - T_rise.
double sol_air_excess(double delta_t, double tau, double dtdt, double t_rise);

// G_raw = gain (h_c / alpha) T_sol.
double reconstruct_ghi(double h_c, double absorptivity, double t_sol, double gain);

// (RH/100)^k.
double cloud_proxy(double relative_humidity, double k_cloud);

// G_cs (1 - 0.75 (RH/100)^(3.4 k)).
double baseline_ghi(double g_cs, double relative_humidity, double k_cloud);

struct SanityInputs {
    double ghi_raw = 0.0;
    double baseline = 0.0;
    double g_cs = 0.0;
    double delta_t = 0.0;
    bool daylight = false;
    bool stable = false;
};

struct SanityResult {
    double ghi = 0.0;
    FlagSet flags;
};

SanityResult sanity_check(const SanityInputs& in);

struct CloudFeedbackInputs {
    double k_cloud = 1.5;
    double learning_rate = 0.01;
    double relative_humidity = 0.0;
    double zenith_deg = 90.0;
    double ghi_reactive = 0.0;
    double ghi_baseline = 0.0;
    double g_cs = 0.0;
};

// One exponential-smoothing step of k_cloud toward the exponent that would
// make the baseline match the reactive estimate. No-op when the sun is low,
// g_cs vanishes, or the humidity carries no information about k.
double adapt_cloud_k(const CloudFeedbackInputs& in);

// Dual-path reconstruction for one sensor pair.
//
// step() returns an estimate for the centre of the derivative window, so
// estimates trail the input by one sample (half a Savitzky-Golay window).
// An invalid sample yields an estimate at its own timestamp flagged
// out_of_envelope and leaves the filter untouched.
class Pipeline {
public:
    explicit Pipeline(const ReconstructionParams& params);

    std::optional<FluxEstimate> step(const DifferentialSample& sample);

    const ReconstructionParams& params() const { return params_; }
    double cloud_exponent() const { return k_cloud_; }

    // Convective coefficient the reconstruction uses for a reference reading.
    static double convective_coefficient_for(const ReconstructionParams& params, double rho, std::optional<double> wind);

private:
    struct Context {
        double timestamp;
        double delta_t;
        double h_c;
        double tau;
        double t_rise;
        double relative_humidity;
        bool out_of_envelope;
    };

    FluxEstimate failed_estimate(const DifferentialSample& sample) const;

    ReconstructionParams params_;
    inr::InertialFilter filter_;
    std::deque<Context> contexts_;
    std::optional<double> last_timestamp_;
    std::optional<double> stable_since_;
    double k_cloud_;
};

}  // namespace dtdss::flux
