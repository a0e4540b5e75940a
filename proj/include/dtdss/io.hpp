#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dtdss/flux.hpp"
#include "dtdss/plantsim.hpp"

namespace dtdss::io {

// Flat `key = value` text with `#` comments. Lines are kept verbatim so a
// file can be rewritten in place without losing the user's layout.
class KeyValueFile {
public:
    static KeyValueFile parse(std::istream& in, const std::string& source = "<input>");
    static KeyValueFile load(const std::string& path);
    void save(const std::string& path) const;
    void write(std::ostream& out) const;

    std::optional<std::string> get(std::string_view key) const;
    std::vector<std::string> keys() const;

    // Replaces the value of `key` (appending it when absent). A non-empty
    // comment replaces the comment block directly above the key.
    void set(std::string_view key, std::string_view value, std::string_view comment = {});

private:
    struct Line {
        std::string text;
        std::string key;  // empty for comments and blanks
    };
    std::vector<Line> lines_;
};

// Strict numeric parsing: the whole token must be consumed.
std::optional<double> parse_double(std::string_view text);
std::string format_double(double value);     // %.6g
std::string format_timestamp(double value);  // %.3f

// Unknown keys and malformed values raise InvalidInput naming the key.
flux::ReconstructionParams params_from(const KeyValueFile& file);
flux::ReconstructionParams load_params(const std::string& path);
void write_params(std::ostream& out, const flux::ReconstructionParams& params);

plantsim::PlantConfig plant_from(const KeyValueFile& file);
plantsim::PlantConfig load_plant(const std::string& path);
void write_plant(std::ostream& out, const plantsim::PlantConfig& plant);

// Documented key lists, in file order.
const std::vector<std::string_view>& params_keys();
const std::vector<std::string_view>& plant_keys();

struct TelemetryRecord {
    double timestamp = 0.0;
    double t_ref_c = 0.0;
    double rh_ref_pct = 0.0;
    double p_ref_hpa = 0.0;
    double t_flux_c = 0.0;
    std::optional<double> wind_ms;
    std::optional<double> g_ref_wm2;
    std::optional<double> g_true_wm2;

    flux::DifferentialSample to_sample() const;
};

inline constexpr std::string_view kTelemetryHeader = "timestamp_s,t_ref_c,rh_ref_pct,p_ref_hpa,t_flux_c,wind_ms,g_ref_wm2";
inline constexpr std::string_view kTruthColumn = "g_true_wm2";

struct TelemetryFile {
    std::vector<TelemetryRecord> records;
    std::size_t malformed = 0;
    std::vector<std::string> warnings;  // one per skipped row, capped
    bool has_truth = false;

    std::size_t rows() const { return records.size() + malformed; }
    double malformed_fraction() const;
};

// Rows that do not parse, or whose timestamp does not advance, are skipped
// and counted. A bad header raises InvalidInput.
TelemetryFile read_telemetry(std::istream& in);
TelemetryFile read_telemetry(const std::string& path);

void write_telemetry(std::ostream& out, const std::vector<plantsim::SimulatedSample>& samples, bool with_truth = true);

inline constexpr std::string_view kEstimatesHeader =
    "timestamp_s,ghi_wm2,ghi_raw_wm2,t_sol_k,baseline_wm2,gcs_wm2,flags";

struct EstimateRow {
    double timestamp = 0.0;
    double ghi = 0.0;
    double ghi_raw = 0.0;
    double t_sol = 0.0;
    double baseline = 0.0;
    double g_cs = 0.0;
    flux::FlagSet flags;
};

EstimateRow to_row(const flux::FluxEstimate& estimate);
void write_estimates_header(std::ostream& out);
void write_estimate(std::ostream& out, const EstimateRow& row);

// A headed CSV read as named numeric columns; empty cells become NaN.
// Column "flags" is kept as text.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> values;  // values[column][row]
    std::vector<std::string> flags;           // empty unless a flags column exists
    std::size_t malformed = 0;

    std::optional<std::size_t> column(std::string_view name) const;
    std::size_t rows() const { return values.empty() ? 0 : values.front().size(); }
};

Table read_table(const std::string& path);

// JSON scenario description; see config/scenarios/ for the format.
plantsim::Scenario load_scenario(const std::string& path);

}  // namespace dtdss::io
