#include "dtdss/io.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

#include <json.hpp>

#include "dtdss/error.hpp"

namespace dtdss::io {
namespace {

constexpr std::string_view kProvenancePrefix = "# fit:";
constexpr std::size_t kMaxWarnings = 20;

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t begin = 0;
    while (true) {
        const auto pos = line.find(sep, begin);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(begin));
            return out;
        }
        out.push_back(line.substr(begin, pos - begin));
        begin = pos + 1;
    }
}

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path);
    if (!in) raise(ErrorCode::Io, "cannot open " + path);
    return in;
}

std::string read_header(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) raise(ErrorCode::InvalidInput, "empty file, expected a CSV header");
    return std::string(trim(line));
}

double number(const KeyValueFile& file, std::string_view key, double fallback) {
    const auto text = file.get(key);
    if (!text) return fallback;
    const auto v = parse_double(*text);
    if (!v || !std::isfinite(*v)) raise(ErrorCode::InvalidInput, "key " + std::string(key) + ": not a number: " + *text);
    return *v;
}

int integer(const KeyValueFile& file, std::string_view key, int fallback) {
    const double v = number(file, key, fallback);
    if (v != std::floor(v)) raise(ErrorCode::InvalidInput, "key " + std::string(key) + ": expected an integer");
    return static_cast<int>(v);
}

bool boolean(const KeyValueFile& file, std::string_view key, bool fallback) {
    const auto text = file.get(key);
    if (!text) return fallback;
    if (*text == "true" || *text == "1" || *text == "on") return true;
    if (*text == "false" || *text == "0" || *text == "off") return false;
    raise(ErrorCode::InvalidInput, "key " + std::string(key) + ": expected true or false");
}

void check_known(const KeyValueFile& file, const std::vector<std::string_view>& known) {
    for (const auto& k : file.keys())
        if (std::find(known.begin(), known.end(), k) == known.end()) raise(ErrorCode::InvalidInput, "unknown key: " + k);
}

std::string_view mode_name(inr::DerivativeMode m) {
    return m == inr::DerivativeMode::SavitzkyGolay ? "savgol" : "central";
}

void put(std::ostream& out, std::string_view key, const std::string& value, std::string_view note) {
    out << key << " = " << value;
    if (!note.empty()) out << "  # " << note;
    out << '\n';
}

std::optional<double> optional_cell(std::string_view cell, bool& ok) {
    cell = trim(cell);
    if (cell.empty()) return std::nullopt;
    const auto v = parse_double(cell);
    if (!v || !std::isfinite(*v)) ok = false;
    return v;
}

double required_cell(std::string_view cell, bool& ok) {
    const auto v = optional_cell(cell, ok);
    if (!v) {
        ok = false;
        return 0.0;
    }
    return *v;
}

}  // namespace

KeyValueFile KeyValueFile::parse(std::istream& in, const std::string& source) {
    KeyValueFile f;
    std::string raw;
    std::size_t number = 0;
    while (std::getline(in, raw)) {
        ++number;
        if (!raw.empty() && raw.back() == '\r') raw.pop_back();
        const auto body = trim(raw);
        if (body.empty() || body.front() == '#') {
            f.lines_.push_back({raw, {}});
            continue;
        }
        const auto eq = body.find('=');
        const auto key = eq == std::string_view::npos ? std::string_view{} : trim(body.substr(0, eq));
        if (key.empty()) raise(ErrorCode::InvalidInput, source + ":" + std::to_string(number) + ": expected key = value");
        if (f.get(key)) raise(ErrorCode::InvalidInput, source + ":" + std::to_string(number) + ": duplicate key " + std::string(key));
        f.lines_.push_back({raw, std::string(key)});
    }
    return f;
}

KeyValueFile KeyValueFile::load(const std::string& path) {
    auto in = open_input(path);
    return parse(in, path);
}

void KeyValueFile::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) raise(ErrorCode::Io, "cannot write " + path);
    write(out);
    if (!out) raise(ErrorCode::Io, "write failed: " + path);
}

void KeyValueFile::write(std::ostream& out) const {
    for (const auto& l : lines_) out << l.text << '\n';
}

std::optional<std::string> KeyValueFile::get(std::string_view key) const {
    for (const auto& l : lines_) {
        if (l.key != key) continue;
        auto value = std::string_view(l.text).substr(l.text.find('=') + 1);
        if (const auto hash = value.find('#'); hash != std::string_view::npos) value = value.substr(0, hash);
        return std::string(trim(value));
    }
    return std::nullopt;
}

std::vector<std::string> KeyValueFile::keys() const {
    std::vector<std::string> out;
    for (const auto& l : lines_)
        if (!l.key.empty()) out.push_back(l.key);
    return out;
}

void KeyValueFile::set(std::string_view key, std::string_view value, std::string_view comment) {
    const std::string text = std::string(key) + " = " + std::string(value);
    auto it = std::find_if(lines_.begin(), lines_.end(), [&](const Line& l) { return l.key == key; });
    if (it == lines_.end()) {
        if (!comment.empty()) lines_.push_back({std::string(kProvenancePrefix) + " " + std::string(comment), {}});
        lines_.push_back({text, std::string(key)});
        return;
    }
    it->text = text;
    if (comment.empty()) return;
    auto first = it;
    while (first != lines_.begin() && std::prev(first)->text.rfind(kProvenancePrefix, 0) == 0) --first;
    it = lines_.erase(first, it);
    lines_.insert(it, {std::string(kProvenancePrefix) + " " + std::string(comment), {}});
}

std::optional<double> parse_double(std::string_view text) {
    const std::string s(trim(text));
    if (s.empty()) return std::nullopt;
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || errno == ERANGE) return std::nullopt;
    return v;
}

std::string format_double(double value) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", value);
    return buf;
}

std::string format_timestamp(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.3f", value);
    return buf;
}

const std::vector<std::string_view>& params_keys() {
    static const std::vector<std::string_view> keys{
        "absorptivity", "tau_s",     "t_rise_k",        "gain",     "hc_ref",          "rho_ref",       "wind_ref",
        "wind_floor",   "k_cloud",   "alpha_min",       "alpha_max", "jerk_gain",      "derivative_mode", "sg_window",
        "sg_degree",    "lat_deg",   "lon_deg",         "utc_offset_h", "density_scaling", "adapt_k_cloud", "k_cloud_rate"};
    return keys;
}

const std::vector<std::string_view>& plant_keys() {
    static const std::vector<std::string_view> keys{
        "absorptivity", "surface_area_m2", "heat_capacity_jk", "electrical_power_w", "hc_ref",
        "rho_ref",      "wind_ref",        "wind_floor",       "quantization_k",     "noise_sigma_k",
        "sample_interval_s", "seed",       "max_substep_s"};
    return keys;
}

flux::ReconstructionParams params_from(const KeyValueFile& file) {
    check_known(file, params_keys());
    flux::ReconstructionParams p;
    p.absorptivity = number(file, "absorptivity", p.absorptivity);
    p.tau = number(file, "tau_s", p.tau);
    p.t_rise = number(file, "t_rise_k", p.t_rise);
    p.gain = number(file, "gain", p.gain);
    p.convection.h_c_reference = number(file, "hc_ref", p.convection.h_c_reference);
    p.convection.rho_reference = number(file, "rho_ref", p.convection.rho_reference);
    p.convection.wind_reference = number(file, "wind_ref", p.convection.wind_reference);
    p.convection.wind_floor = number(file, "wind_floor", p.convection.wind_floor);
    p.cloud_exponent = number(file, "k_cloud", p.cloud_exponent);
    p.inr.alpha_min = number(file, "alpha_min", p.inr.alpha_min);
    p.inr.alpha_max = number(file, "alpha_max", p.inr.alpha_max);
    p.inr.jerk_gain = number(file, "jerk_gain", p.inr.jerk_gain);
    if (const auto mode = file.get("derivative_mode")) {
        if (*mode == "central") {
            p.inr.derivative_mode = inr::DerivativeMode::CentralDifference;
        } else if (*mode == "savgol") {
            p.inr.derivative_mode = inr::DerivativeMode::SavitzkyGolay;
        } else {
            raise(ErrorCode::InvalidInput, "key derivative_mode: expected central or savgol");
        }
    }
    p.inr.sg_window = integer(file, "sg_window", p.inr.sg_window);
    p.inr.sg_degree = integer(file, "sg_degree", p.inr.sg_degree);
    p.site.latitude_deg = number(file, "lat_deg", p.site.latitude_deg);
    p.site.longitude_deg = number(file, "lon_deg", p.site.longitude_deg);
    p.site.utc_offset_h = number(file, "utc_offset_h", p.site.utc_offset_h);
    p.density_scaling = boolean(file, "density_scaling", p.density_scaling);
    p.adapt_cloud_exponent = boolean(file, "adapt_k_cloud", p.adapt_cloud_exponent);
    p.cloud_learning_rate = number(file, "k_cloud_rate", p.cloud_learning_rate);
    p.inr.tau = p.tau;
    p.validate();
    return p;
}

flux::ReconstructionParams load_params(const std::string& path) { return params_from(KeyValueFile::load(path)); }

void write_params(std::ostream& out, const flux::ReconstructionParams& p) {
    put(out, "absorptivity", format_double(p.absorptivity), "flux-node coating absorptivity");
    put(out, "tau_s", format_double(p.tau), "time constant at the convection reference point");
    put(out, "t_rise_k", format_double(p.t_rise), "self-heating offset at the convection reference point");
    put(out, "gain", format_double(p.gain), "output calibration factor");
    put(out, "hc_ref", format_double(p.convection.h_c_reference), "W/(m^2 K) at rho_ref, wind_ref");
    put(out, "rho_ref", format_double(p.convection.rho_reference), "kg/m^3");
    put(out, "wind_ref", format_double(p.convection.wind_reference), "m/s");
    put(out, "wind_floor", format_double(p.convection.wind_floor), "m/s");
    put(out, "k_cloud", format_double(p.cloud_exponent), "cloud-proxy exponent");
    put(out, "alpha_min", format_double(p.inr.alpha_min), {});
    put(out, "alpha_max", format_double(p.inr.alpha_max), {});
    put(out, "jerk_gain", format_double(p.inr.jerk_gain), "1/K");
    put(out, "derivative_mode", std::string(mode_name(p.inr.derivative_mode)), "central or savgol");
    put(out, "sg_window", std::to_string(p.inr.sg_window), {});
    put(out, "sg_degree", std::to_string(p.inr.sg_degree), {});
    put(out, "lat_deg", format_double(p.site.latitude_deg), {});
    put(out, "lon_deg", format_double(p.site.longitude_deg), "east positive");
    put(out, "utc_offset_h", format_double(p.site.utc_offset_h), "recorded only, solar geometry runs on UTC");
    put(out, "density_scaling", p.density_scaling ? "true" : "false", {});
    put(out, "adapt_k_cloud", p.adapt_cloud_exponent ? "true" : "false", {});
    put(out, "k_cloud_rate", format_double(p.cloud_learning_rate), {});
}

plantsim::PlantConfig plant_from(const KeyValueFile& file) {
    check_known(file, plant_keys());
    plantsim::PlantConfig c;
    c.absorptivity = number(file, "absorptivity", c.absorptivity);
    c.surface_area = number(file, "surface_area_m2", c.surface_area);
    c.heat_capacity = number(file, "heat_capacity_jk", c.heat_capacity);
    c.electrical_power = number(file, "electrical_power_w", c.electrical_power);
    c.convection.h_c_reference = number(file, "hc_ref", c.convection.h_c_reference);
    c.convection.rho_reference = number(file, "rho_ref", c.convection.rho_reference);
    c.convection.wind_reference = number(file, "wind_ref", c.convection.wind_reference);
    c.convection.wind_floor = number(file, "wind_floor", c.convection.wind_floor);
    c.quantization = number(file, "quantization_k", c.quantization);
    c.noise_sigma = number(file, "noise_sigma_k", c.noise_sigma);
    c.sample_interval = number(file, "sample_interval_s", c.sample_interval);
    const double seed = number(file, "seed", static_cast<double>(c.seed));
    if (seed < 0 || seed != std::floor(seed)) raise(ErrorCode::InvalidInput, "key seed: expected a non-negative integer");
    c.seed = static_cast<std::uint64_t>(seed);
    c.max_substep = number(file, "max_substep_s", c.max_substep);
    c.validate();
    return c;
}

plantsim::PlantConfig load_plant(const std::string& path) { return plant_from(KeyValueFile::load(path)); }

void write_plant(std::ostream& out, const plantsim::PlantConfig& c) {
    put(out, "absorptivity", format_double(c.absorptivity), {});
    put(out, "surface_area_m2", format_double(c.surface_area), {});
    put(out, "heat_capacity_jk", format_double(c.heat_capacity), "m C_p");
    put(out, "electrical_power_w", format_double(c.electrical_power), "self-heating");
    put(out, "hc_ref", format_double(c.convection.h_c_reference), {});
    put(out, "rho_ref", format_double(c.convection.rho_reference), {});
    put(out, "wind_ref", format_double(c.convection.wind_reference), {});
    put(out, "wind_floor", format_double(c.convection.wind_floor), {});
    put(out, "quantization_k", format_double(c.quantization), {});
    put(out, "noise_sigma_k", format_double(c.noise_sigma), {});
    put(out, "sample_interval_s", format_double(c.sample_interval), {});
    put(out, "seed", std::to_string(c.seed), {});
    put(out, "max_substep_s", format_double(c.max_substep), "0 picks tau / 10");
}

flux::DifferentialSample TelemetryRecord::to_sample() const {
    flux::DifferentialSample s;
    s.timestamp = timestamp;
    s.reference.timestamp = timestamp;
    s.reference.temperature = t_ref_c + psychro::kCelsiusOffset;
    s.reference.relative_humidity = rh_ref_pct;
    s.reference.pressure = p_ref_hpa;
    s.flux_temp = t_flux_c + psychro::kCelsiusOffset;
    s.wind = wind_ms;
    return s;
}

double TelemetryFile::malformed_fraction() const {
    return rows() == 0 ? 0.0 : static_cast<double>(malformed) / static_cast<double>(rows());
}

TelemetryFile read_telemetry(std::istream& in) {
    const std::string header = read_header(in);
    TelemetryFile f;
    const std::string with_truth = std::string(kTelemetryHeader) + "," + std::string(kTruthColumn);
    if (header == with_truth) {
        f.has_truth = true;
    } else if (header != kTelemetryHeader) {
        raise(ErrorCode::InvalidInput, "unexpected telemetry header: " + header);
    }
    const std::size_t fields = f.has_truth ? 8 : 7;

    std::string line;
    std::size_t number = 1;
    std::optional<double> last;
    while (std::getline(in, line)) {
        ++number;
        const auto body = trim(line);
        if (body.empty()) continue;
        const auto cells = split(body, ',');
        bool ok = cells.size() == fields;
        TelemetryRecord r;
        if (ok) {
            r.timestamp = required_cell(cells[0], ok);
            r.t_ref_c = required_cell(cells[1], ok);
            r.rh_ref_pct = required_cell(cells[2], ok);
            r.p_ref_hpa = required_cell(cells[3], ok);
            r.t_flux_c = required_cell(cells[4], ok);
            r.wind_ms = optional_cell(cells[5], ok);
            r.g_ref_wm2 = optional_cell(cells[6], ok);
            if (f.has_truth) r.g_true_wm2 = optional_cell(cells[7], ok);
        }
        std::string why = ok ? std::string{} : "unparseable row";
        if (ok && last && !(r.timestamp > *last)) {
            ok = false;
            why = "timestamp does not advance";
        }
        if (!ok) {
            ++f.malformed;
            if (f.warnings.size() < kMaxWarnings) f.warnings.push_back("line " + std::to_string(number) + ": " + why);
            continue;
        }
        last = r.timestamp;
        f.records.push_back(r);
    }
    return f;
}

TelemetryFile read_telemetry(const std::string& path) {
    auto in = open_input(path);
    return read_telemetry(in);
}

void write_telemetry(std::ostream& out, const std::vector<plantsim::SimulatedSample>& samples, bool with_truth) {
    out << kTelemetryHeader;
    if (with_truth) out << ',' << kTruthColumn;
    out << '\n';
    for (const auto& s : samples) {
        const auto& d = s.sample;
        out << format_timestamp(d.timestamp) << ',' << format_double(d.reference.temperature_c()) << ','
            << format_double(d.reference.relative_humidity) << ',' << format_double(d.reference.pressure) << ','
            << format_double(d.flux_temp - psychro::kCelsiusOffset) << ',';
        if (d.wind) out << format_double(*d.wind);
        out << ',' << format_double(s.true_ghi);
        if (with_truth) out << ',' << format_double(s.true_ghi);
        out << '\n';
    }
}

EstimateRow to_row(const flux::FluxEstimate& e) {
    return {e.timestamp, e.ghi, e.ghi_raw, e.sol_air_excess, e.baseline_ghi, e.clear_sky_ghi, e.flags};
}

void write_estimates_header(std::ostream& out) { out << kEstimatesHeader << '\n'; }

void write_estimate(std::ostream& out, const EstimateRow& r) {
    out << format_timestamp(r.timestamp) << ',' << format_double(r.ghi) << ',' << format_double(r.ghi_raw) << ','
        << format_double(r.t_sol) << ',' << format_double(r.baseline) << ',' << format_double(r.g_cs) << ','
        << r.flags.to_string() << '\n';
}

std::optional<std::size_t> Table::column(std::string_view name) const {
    const auto it = std::find(columns.begin(), columns.end(), name);
    if (it == columns.end()) return std::nullopt;
    return static_cast<std::size_t>(it - columns.begin());
}

Table read_table(const std::string& path) {
    auto in = open_input(path);
    Table t;
    const std::string header = read_header(in);
    for (auto c : split(header, ',')) t.columns.emplace_back(trim(c));
    const auto flags_col = t.column("flags");
    t.values.assign(t.columns.size(), {});

    std::string line;
    std::vector<double> row(t.columns.size());
    while (std::getline(in, line)) {
        const auto body = trim(line);
        if (body.empty()) continue;
        const auto cells = split(body, ',');
        bool ok = cells.size() == t.columns.size();
        std::string flags;
        for (std::size_t i = 0; ok && i < cells.size(); ++i) {
            if (flags_col && i == *flags_col) {
                flags = std::string(trim(cells[i]));
                row[i] = 0.0;
                continue;
            }
            const auto v = optional_cell(cells[i], ok);
            row[i] = v.value_or(std::nan(""));
        }
        if (!ok) {
            ++t.malformed;
            continue;
        }
        for (std::size_t i = 0; i < row.size(); ++i) t.values[i].push_back(row[i]);
        if (flags_col) t.flags.push_back(std::move(flags));
    }
    return t;
}

namespace {

using nlohmann::json;

plantsim::Segment::Shape shape_from(const std::string& name) {
    using S = plantsim::Segment::Shape;
    static const std::map<std::string, S> shapes{
        {"constant", S::Constant}, {"ramp", S::Ramp}, {"sinusoid", S::Sinusoid}, {"step", S::Step}, {"noise", S::Noise}};
    const auto it = shapes.find(name);
    if (it == shapes.end()) raise(ErrorCode::InvalidInput, "unknown segment shape: " + name);
    return it->second;
}

plantsim::Trajectory trajectory_from(const json& j, double fallback, double duration) {
    if (j.is_null()) return plantsim::Trajectory::constant(fallback);
    if (j.is_number()) return plantsim::Trajectory::constant(j.get<double>());
    if (!j.is_array()) raise(ErrorCode::InvalidInput, "trajectory must be a number or a list of segments");
    std::vector<plantsim::Segment> segments;
    for (const auto& s : j) {
        plantsim::Segment seg;
        seg.shape = shape_from(s.value("shape", std::string("constant")));
        seg.start = s.value("start", 0.0);
        seg.end = s.value("end", duration);
        seg.value = s.value("value", 0.0);
        seg.target = s.value("target", seg.value);
        seg.amplitude = s.value("amplitude", 0.0);
        seg.period = s.value("period", seg.period);
        seg.phase = s.value("phase", 0.0);
        seg.at = s.value("at", seg.start);
        seg.rate = s.value("rate", seg.rate);
        seg.seed = s.value("seed", std::uint64_t{0});
        if (s.contains("floor")) seg.floor = s.at("floor").get<double>();
        segments.push_back(seg);
    }
    return plantsim::Trajectory(std::move(segments));
}

}  // namespace

plantsim::Scenario load_scenario(const std::string& path) {
    auto in = open_input(path);
    json j;
    try {
        j = json::parse(in);
        plantsim::Scenario s;
        s.name = j.value("name", path);
        s.start_time = j.value("start_time", plantsim::kLibraryStartTime);
        s.duration = j.at("duration").get<double>();
        if (j.contains("sample_interval")) s.sample_interval = j.at("sample_interval").get<double>();
        const auto field = [&](const char* key) { return j.contains(key) ? j.at(key) : json(); };
        s.ambient_temp = trajectory_from(field("ambient_temp"), 298.15, s.duration);
        s.irradiance = trajectory_from(field("irradiance"), 0.0, s.duration);
        s.relative_humidity = trajectory_from(field("relative_humidity"), 60.0, s.duration);
        s.pressure = trajectory_from(field("pressure"), 1013.25, s.duration);
        s.wind = trajectory_from(field("wind"), 1.0, s.duration);
        if (!(s.duration > 0.0)) raise(ErrorCode::InvalidInput, "scenario duration must be positive");
        return s;
    } catch (const json::exception& e) {
        raise(ErrorCode::InvalidInput, path + ": " + e.what());
    }
}

}  // namespace dtdss::io
