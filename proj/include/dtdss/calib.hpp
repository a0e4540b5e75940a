#pragma once

#include <cstddef>
#include <map>
#include <span>
#include <vector>

#include "dtdss/inr.hpp"

namespace dtdss::calib {

using inr::TimedValue;

inline constexpr double kStepFraction = 0.63212055882855767;  // 1 - 1/e
inline constexpr double kMinDecay = 1.0;                       // K
inline constexpr std::size_t kMinStepSamples = 30;
inline constexpr double kSettlingTaus = 5.0;
inline constexpr double kMaxTrise = 5.0;
inline constexpr std::size_t kMinGainSamples = 100;
inline constexpr double kGainDaylightThreshold = 50.0;  // W/m^2
inline constexpr double kMapeMinReference = 20.0;       // W/m^2

struct StepResponseSeries {
    std::vector<TimedValue> samples;
};

struct TauEstimate {
    double tau = 0.0;         // s
    double onset_time = 0.0;  // s, time of the peak
    double peak = 0.0;
    double final_value = 0.0;
    double residual = 0.0;  // RMS misfit of the fitted exponential after the onset
};

// Time for a cooling transient to cover 63.2% of its drop, measured from the
// last sample at the global maximum, with linear interpolation of the crossing.
TauEstimate estimate_tau(const StepResponseSeries& series);

struct DarkSample {
    double timestamp = 0.0;
    double flux_temp = 0.0;
    double reference_temp = 0.0;
};

struct DarkSeries {
    std::vector<DarkSample> samples;
    double sampling_rate() const;  // Hz, from the mean spacing
};

struct TriseTable {
    std::map<double, double> entries;  // sampling rate (Hz) -> t_rise (K)

    // Entry with the nearest sampling rate.
    double lookup(double rate_hz) const;
};

// Per series, mean(T_flux - T_ref) over the final 20% of samples.
TriseTable estimate_trise(std::span<const DarkSeries> series, double tau);

struct GainFit {
    double gain = 0.0;
    std::size_t samples = 0;  // daylight samples used
    double residual = 0.0;    // RMS of ref - gain * est over those samples
};

// Through-origin slope sum(ref est) / sum(est^2) over samples with ref > 50 W/m^2.
GainFit fit_gain(std::span<const double> estimates, std::span<const double> references);

struct MapeResult {
    double percent = 0.0;
    std::size_t included = 0;
    std::size_t excluded = 0;
};

MapeResult mape(std::span<const double> references, std::span<const double> estimates,
                double min_reference = kMapeMinReference);

double rmse(std::span<const double> references, std::span<const double> estimates);

// R^2 of the least-squares line of references on estimates.
double r_squared(std::span<const double> references, std::span<const double> estimates);

}  // namespace dtdss::calib
