#pragma once

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dtdss/io.hpp"

namespace dtdss::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

inline constexpr double kMaxMalformedFraction = 0.05;
inline constexpr double kJoinTolerance = 0.5;  // s

struct ReplayResult {
    std::vector<io::EstimateRow> rows;  // sorted by timestamp
    std::size_t records = 0;
};

// Float pipeline, or the integer mirror when fixed_point is set. The integer
// mirror needs uniform sampling and uses central differences; baseline and
// clear-sky columns still come from the float reference path.
ReplayResult replay(const io::TelemetryFile& telemetry, const flux::ReconstructionParams& params, bool fixed_point);

struct Pairs {
    std::vector<double> timestamps;
    std::vector<double> estimates;
    std::vector<double> references;
    std::vector<std::string> flags;
};

// Nearest-timestamp inner join within kJoinTolerance; NaN on either side
// drops the pair. `flags` may be empty.
Pairs join(const std::vector<double>& est_t, const std::vector<double>& est, const std::vector<std::string>& flags,
           const std::vector<double>& ref_t, const std::vector<double>& ref);

struct EvaluationReport {
    std::size_t matched = 0;
    std::size_t included = 0;
    std::size_t excluded = 0;  // reference below the minimum
    double mape = 0.0;         // percent
    double rmse = 0.0;         // W/m^2
    std::optional<double> r_squared;
    std::map<std::string, std::size_t> flag_histogram;
};

// Metrics over pairs whose reference is at least min_reference. Throws
// Alignment when nothing pairs up.
EvaluationReport evaluate(const Pairs& pairs, double min_reference);
void write_report(std::ostream& out, const EvaluationReport& report);

struct CalibrationOutcome {
    std::string key;  // params key to update
    double value = 0.0;
    double residual = 0.0;
    std::string summary;  // human-readable detail lines
};

// Step telemetry: tau from T_flux - T_ref, normalized to the convection
// reference point of `params`.
CalibrationOutcome calibrate_tau(const io::TelemetryFile& step, const flux::ReconstructionParams& params);

// Dark telemetry, one file per sampling rate. The table entry nearest to
// `rate_hz` (first file when absent) becomes t_rise_k.
CalibrationOutcome calibrate_trise(const std::vector<io::TelemetryFile>& dark, const flux::ReconstructionParams& params,
                                   std::optional<double> rate_hz);

// Paired estimates produced with `params`; the fitted slope rescales its gain.
CalibrationOutcome calibrate_gain(const Pairs& pairs, const flux::ReconstructionParams& params);

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dtdss::cli
