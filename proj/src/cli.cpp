#include "dtdss/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>

#include "dtdss/calib.hpp"
#include "dtdss/error.hpp"
#include "dtdss/fixedpoint.hpp"
#include "dtdss/psychro.hpp"

namespace dtdss::cli {
namespace {

constexpr const char* kFieldBenchmark =
    "# field benchmark against a reference pyranometer: MAPE 7.2%, RMSE 45 W/m^2, R^2 0.94";

std::string utc_now() {
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// Loading user configuration is a usage problem, not a runtime failure.
template <class F>
auto configuration(F&& load) {
    try {
        return load();
    } catch (const Error& e) {
        raise(ErrorCode::Usage, e.what());
    }
}

double median_spacing(const std::vector<io::TelemetryRecord>& records) {
    if (records.size() < 2) raise(ErrorCode::InsufficientHistory, "need at least two records");
    std::vector<double> d;
    d.reserve(records.size() - 1);
    for (std::size_t i = 1; i < records.size(); ++i) d.push_back(records[i].timestamp - records[i - 1].timestamp);
    std::nth_element(d.begin(), d.begin() + d.size() / 2, d.end());
    return d[d.size() / 2];
}

struct Conditions {
    double rho = 0.0;
    std::optional<double> wind;
};

Conditions mean_conditions(const std::vector<io::TelemetryRecord>& records) {
    if (records.empty()) raise(ErrorCode::InsufficientSignal, "no usable records");
    double rho = 0.0, wind = 0.0;
    std::size_t winds = 0;
    for (const auto& r : records) {
        rho += psychro::moist_air_density(r.to_sample().reference);
        if (r.wind_ms) {
            wind += *r.wind_ms;
            ++winds;
        }
    }
    Conditions c;
    c.rho = rho / static_cast<double>(records.size());
    if (winds > 0) c.wind = wind / static_cast<double>(winds);
    return c;
}

// h_c at the measurement conditions over h_c at the reference point.
double reference_ratio(const flux::ReconstructionParams& params, const Conditions& c) {
    return flux::Pipeline::convective_coefficient_for(params, c.rho, c.wind) / params.convection.h_c_reference;
}

std::string describe(const char* fmt, double a, double b = 0.0, double c = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof buf, fmt, a, b, c);
    return buf;
}

io::TelemetryFile read_checked(const std::string& path, std::ostream& err) {
    auto t = configuration([&] { return io::read_telemetry(path); });
    for (const auto& w : t.warnings) err << "warning: " << path << ": " << w << '\n';
    if (t.malformed > 0) err << "warning: " << path << ": skipped " << t.malformed << " malformed row(s)\n";
    if (t.malformed_fraction() > kMaxMalformedFraction)
        raise(ErrorCode::InvalidInput, path + ": more than 5% of rows are malformed");
    return t;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path);
    if (!out) raise(ErrorCode::Io, "cannot write " + path);
    return out;
}

// Runs `body` against either the named file or `fallback`.
template <class F>
void with_output(const std::string& path, std::ostream& fallback, F&& body) {
    if (path.empty() || path == "-") {
        body(fallback);
        return;
    }
    auto out = open_output(path);
    body(out);
    out.close();
    if (!out) raise(ErrorCode::Io, "write failed: " + path);
}

struct Series {
    std::vector<double> t;
    std::vector<double> v;
    std::vector<std::string> flags;
};

Series column_series(const io::Table& table, const std::string& path, const std::string& column) {
    const auto tc = table.column("timestamp_s");
    const auto vc = table.column(column);
    if (!tc) raise(ErrorCode::Usage, path + ": no timestamp_s column");
    if (!vc) raise(ErrorCode::Usage, path + ": no column " + column);
    return {table.values[*tc], table.values[*vc], table.flags};
}

std::string format_metric(double v) { return io::format_double(v); }

}  // namespace

ReplayResult replay(const io::TelemetryFile& telemetry, const flux::ReconstructionParams& params, bool fixed_point) {
    ReplayResult result;
    result.records = telemetry.records.size();
    auto float_params = params;
    if (fixed_point) float_params.inr.derivative_mode = inr::DerivativeMode::CentralDifference;
    flux::Pipeline pipeline(float_params);

    std::optional<fixedpoint::FixedPipeline> fixed;
    if (fixed_point && telemetry.records.size() >= 2) fixed.emplace(float_params, median_spacing(telemetry.records));

    for (const auto& record : telemetry.records) {
        const auto sample = record.to_sample();
        const auto estimate = pipeline.step(sample);
        const bool failed = estimate && std::isnan(estimate->ghi_raw);
        std::optional<fixedpoint::FixedOutput> integer;
        if (fixed && !failed) {
            try {
                integer = fixed->step(fixedpoint::FixedPipeline::encode(float_params, sample));
            } catch (const Error&) {
                integer.reset();
            }
        }
        if (!estimate) continue;
        auto row = io::to_row(*estimate);
        if (integer) {
            const auto check = flux::sanity_check({static_cast<double>(integer->ghi_raw), estimate->baseline_ghi,
                                                   estimate->clear_sky_ghi, estimate->delta_t, estimate->daylight,
                                                   estimate->stable});
            row.ghi = integer->ghi;
            row.ghi_raw = integer->ghi_raw;
            row.t_sol = integer->ghi_raw * params.absorptivity / (params.gain * estimate->convective_coefficient);
            row.flags = check.flags;
            if (integer->saturated) row.flags.set(flux::Flag::Saturated);
        }
        result.rows.push_back(row);
    }
    std::stable_sort(result.rows.begin(), result.rows.end(),
                     [](const io::EstimateRow& a, const io::EstimateRow& b) { return a.timestamp < b.timestamp; });
    return result;
}

Pairs join(const std::vector<double>& est_t, const std::vector<double>& est, const std::vector<std::string>& flags,
           const std::vector<double>& ref_t, const std::vector<double>& ref) {
    std::vector<std::size_t> order(ref_t.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return ref_t[a] < ref_t[b]; });

    Pairs p;
    for (std::size_t i = 0; i < est_t.size(); ++i) {
        const auto it = std::lower_bound(order.begin(), order.end(), est_t[i],
                                         [&](std::size_t k, double t) { return ref_t[k] < t; });
        std::optional<std::size_t> best;
        double gap = kJoinTolerance;
        for (auto c : {it, it == order.begin() ? it : std::prev(it)}) {
            if (c == order.end()) continue;
            const double d = std::abs(ref_t[*c] - est_t[i]);
            if (d <= gap) {
                gap = d;
                best = *c;
            }
        }
        if (!best || std::isnan(est[i]) || std::isnan(ref[*best])) continue;
        p.timestamps.push_back(est_t[i]);
        p.estimates.push_back(est[i]);
        p.references.push_back(ref[*best]);
        p.flags.push_back(i < flags.size() ? flags[i] : std::string{});
    }
    return p;
}

EvaluationReport evaluate(const Pairs& pairs, double min_reference) {
    if (pairs.references.empty()) raise(ErrorCode::Alignment, "no estimate pairs with a reference within 0.5 s");
    EvaluationReport r;
    r.matched = pairs.references.size();
    std::vector<double> ref, est;
    for (std::size_t i = 0; i < r.matched; ++i) {
        if (pairs.references[i] >= min_reference) {
            ref.push_back(pairs.references[i]);
            est.push_back(pairs.estimates[i]);
        }
        const auto& f = pairs.flags[i];
        if (f.empty()) {
            ++r.flag_histogram["none"];
            continue;
        }
        for (auto bits = flux::FlagSet::parse(f); auto flag : {flux::Flag::ExceedsClearSky, flux::Flag::PathDisagreement,
                                                               flux::Flag::NodeInversion, flux::Flag::Clamped,
                                                               flux::Flag::OutOfEnvelope, flux::Flag::Saturated})
            if (bits.has(flag)) ++r.flag_histogram[std::string(flux::flag_name(flag))];
    }
    r.included = ref.size();
    r.excluded = r.matched - r.included;
    if (ref.empty()) {
        r.mape = r.rmse = std::nan("");
        return r;
    }
    r.mape = calib::mape(ref, est, min_reference).percent;
    r.rmse = calib::rmse(ref, est);
    try {
        r.r_squared = calib::r_squared(ref, est);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::UndefinedMetric) throw;
    }
    return r;
}

void write_report(std::ostream& out, const EvaluationReport& r) {
    out << "samples_matched = " << r.matched << '\n';
    out << "samples_included = " << r.included << '\n';
    out << "samples_excluded = " << r.excluded << '\n';
    out << "mape_pct = " << format_metric(r.mape) << '\n';
    out << "rmse_wm2 = " << format_metric(r.rmse) << '\n';
    out << "r_squared = " << (r.r_squared ? format_metric(*r.r_squared) : std::string("undefined")) << '\n';
    for (const auto& [name, count] : r.flag_histogram) out << "flag_" << name << " = " << count << '\n';
    out << kFieldBenchmark << '\n';
}

CalibrationOutcome calibrate_tau(const io::TelemetryFile& step, const flux::ReconstructionParams& params) {
    calib::StepResponseSeries series;
    series.samples.reserve(step.records.size());
    for (const auto& r : step.records) series.samples.push_back({r.timestamp, r.t_flux_c - r.t_ref_c});
    const auto fit = calib::estimate_tau(series);
    const double ratio = reference_ratio(params, mean_conditions(step.records));
    CalibrationOutcome out;
    out.key = "tau_s";
    out.value = fit.tau * ratio;
    out.residual = fit.residual;
    out.summary = describe("measured tau %.6g s, reference-point tau %.6g s, fit residual %.3g K\n", fit.tau,
                           out.value, fit.residual);
    return out;
}

CalibrationOutcome calibrate_trise(const std::vector<io::TelemetryFile>& dark, const flux::ReconstructionParams& params,
                                   std::optional<double> rate_hz) {
    if (dark.empty()) raise(ErrorCode::InvalidInput, "no dark series given");
    std::vector<calib::DarkSeries> series;
    std::vector<double> ratios;
    double tau_measured = 0.0;
    for (const auto& file : dark) {
        calib::DarkSeries s;
        for (const auto& r : file.records)
            s.samples.push_back({r.timestamp, r.t_flux_c + psychro::kCelsiusOffset, r.t_ref_c + psychro::kCelsiusOffset});
        series.push_back(std::move(s));
        ratios.push_back(reference_ratio(params, mean_conditions(file.records)));
        tau_measured = std::max(tau_measured, params.tau / ratios.back());
    }
    const auto table = calib::estimate_trise(series, tau_measured);

    CalibrationOutcome out;
    out.key = "t_rise_k";
    const double rate = rate_hz.value_or(series.front().sampling_rate());
    std::size_t pick = 0;
    for (std::size_t i = 1; i < series.size(); ++i)
        if (std::abs(series[i].sampling_rate() - rate) < std::abs(series[pick].sampling_rate() - rate)) pick = i;
    out.value = table.lookup(series[pick].sampling_rate()) * ratios[pick];
    for (std::size_t i = 0; i < series.size(); ++i) {
        const double hz = series[i].sampling_rate();
        out.summary += describe("rate %.6g Hz: measured t_rise %.6g K, reference-point %.6g K\n", hz, table.lookup(hz),
                                table.lookup(hz) * ratios[i]);
    }
    return out;
}

CalibrationOutcome calibrate_gain(const Pairs& pairs, const flux::ReconstructionParams& params) {
    const auto fit = calib::fit_gain(pairs.estimates, pairs.references);
    CalibrationOutcome out;
    out.key = "gain";
    out.value = params.gain * fit.gain;
    out.residual = fit.residual;
    out.summary = describe("slope %.6g over %.0f daylight samples, new gain %.6g\n", fit.gain,
                           static_cast<double>(fit.samples), out.value) +
                  describe("fit residual %.3g W/m^2\n", fit.residual);
    return out;
}

namespace {

int cmd_simulate(const std::string& scenario_name, const std::string& plant_path, const std::string& output,
                 std::optional<std::uint64_t> seed, std::uint64_t scenario_seed, std::ostream& out, std::ostream& err) {
    auto plant = plant_path.empty() ? plantsim::PlantConfig{} : configuration([&] { return io::load_plant(plant_path); });
    if (seed) plant.seed = *seed;
    const bool is_file = scenario_name.ends_with(".json") || std::filesystem::is_regular_file(scenario_name);
    const auto scenario = is_file ? configuration([&] { return io::load_scenario(scenario_name); })
                                  : plantsim::library_scenario(scenario_name, scenario_seed);
    const auto result = plantsim::simulate(plant, scenario);
    with_output(output, out, [&](std::ostream& o) { io::write_telemetry(o, result.samples, true); });

    double lo = INFINITY, hi = -INFINITY, sum = 0.0;
    for (const auto& s : result.samples) {
        lo = std::min(lo, s.true_ghi);
        hi = std::max(hi, s.true_ghi);
        sum += s.true_ghi;
    }
    const double n = static_cast<double>(result.samples.size());
    std::ostream& summary = (output.empty() || output == "-") ? err : out;
    summary << "scenario " << scenario.name << '\n'
            << "duration_s = " << io::format_double(scenario.duration) << '\n'
            << "samples = " << result.samples.size() << '\n'
            << "sample_interval_s = " << io::format_double(scenario.sample_interval.value_or(plant.sample_interval)) << '\n'
            << "g_true_min_wm2 = " << io::format_double(n > 0 ? lo : 0.0) << '\n'
            << "g_true_mean_wm2 = " << io::format_double(n > 0 ? sum / n : 0.0) << '\n'
            << "g_true_max_wm2 = " << io::format_double(n > 0 ? hi : 0.0) << '\n'
            << "plant_min_tau_s = " << io::format_double(result.diagnostics.min_tau) << '\n';
    return kExitOk;
}

int cmd_replay(const std::string& input, const std::string& params_path, const std::string& output, bool fixed_point,
               std::ostream& out, std::ostream& err) {
    const auto params =
        params_path.empty() ? flux::ReconstructionParams{} : configuration([&] { return io::load_params(params_path); });
    if (fixed_point && params.inr.derivative_mode != inr::DerivativeMode::CentralDifference)
        err << "warning: the fixed-point path uses central differences regardless of derivative_mode\n";
    const auto telemetry = read_checked(input, err);
    const auto result = replay(telemetry, params, fixed_point);
    with_output(output, out, [&](std::ostream& o) {
        io::write_estimates_header(o);
        for (const auto& row : result.rows) io::write_estimate(o, row);
    });
    std::ostream& summary = (output.empty() || output == "-") ? err : out;
    summary << "records = " << result.records << '\n'
            << "estimates = " << result.rows.size() << '\n'
            << "malformed = " << telemetry.malformed << '\n';
    return kExitOk;
}

Pairs pairs_for_gain(const std::string& input, const std::string& reference, const std::string& column,
                     const flux::ReconstructionParams& params, std::ostream& err) {
    const auto table = configuration([&] { return io::read_table(input); });
    if (table.column("ghi_raw_wm2")) {
        if (reference.empty()) raise(ErrorCode::Usage, "gain from an estimates file needs --reference");
        const auto est = column_series(table, input, "ghi_raw_wm2");
        const auto ref = column_series(configuration([&] { return io::read_table(reference); }), reference, column);
        return join(est.t, est.v, {}, ref.t, ref.v);
    }
    // Telemetry with a reference column: reconstruct first.
    const auto telemetry = read_checked(input, err);
    const auto result = replay(telemetry, params, false);
    std::vector<double> et, ev, rt, rv;
    for (const auto& row : result.rows) {
        et.push_back(row.timestamp);
        ev.push_back(row.ghi_raw);
    }
    for (const auto& r : telemetry.records) {
        rt.push_back(r.timestamp);
        rv.push_back(r.g_ref_wm2.value_or(std::nan("")));
    }
    return join(et, ev, {}, rt, rv);
}

int cmd_calibrate(const std::string& mode, const std::vector<std::string>& inputs, const std::string& params_path,
                  const std::string& reference, const std::string& column, std::optional<double> rate, bool dry_run,
                  std::ostream& out, std::ostream& err) {
    auto file = configuration([&] { return io::KeyValueFile::load(params_path); });
    const auto params = configuration([&] { return io::params_from(file); });

    CalibrationOutcome outcome;
    if (mode == "tau") {
        if (inputs.size() != 1) raise(ErrorCode::Usage, "calibrate tau takes one step-response file");
        outcome = calibrate_tau(read_checked(inputs.front(), err), params);
    } else if (mode == "trise") {
        std::vector<io::TelemetryFile> dark;
        for (const auto& path : inputs) dark.push_back(read_checked(path, err));
        outcome = calibrate_trise(dark, params, rate);
    } else {
        if (inputs.size() != 1) raise(ErrorCode::Usage, "calibrate gain takes one input file");
        outcome = calibrate_gain(pairs_for_gain(inputs.front(), reference, column, params, err), params);
    }

    std::string sources;
    for (const auto& p : inputs) sources += (sources.empty() ? "" : ",") + std::filesystem::path(p).filename().string();
    const std::string provenance = "calibrate " + mode + " source=" + sources + " at=" + utc_now() +
                                   " residual=" + io::format_double(outcome.residual);
    out << outcome.summary << outcome.key << " = " << io::format_double(outcome.value) << '\n';
    if (!dry_run) {
        file.set(outcome.key, io::format_double(outcome.value), provenance);
        configuration([&] { return io::params_from(file); });
        file.save(params_path);
    }
    return kExitOk;
}

int cmd_evaluate(const std::string& input, const std::string& reference, const std::string& column,
                 const std::string& estimate_column, double min_reference, const std::string& output, std::ostream& out) {
    const auto est_table = configuration([&] { return io::read_table(input); });
    const auto est = column_series(est_table, input, estimate_column);
    const auto ref_path = reference.empty() ? input : reference;
    const auto ref = reference.empty() ? column_series(est_table, input, column)
                                       : column_series(configuration([&] { return io::read_table(ref_path); }), ref_path, column);
    const auto report = evaluate(join(est.t, est.v, est.flags, ref.t, ref.v), min_reference);
    write_report(out, report);
    if (!output.empty()) with_output(output, out, [&](std::ostream& o) { write_report(o, report); });
    return kExitOk;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Differential temperature soft sensing of solar irradiance", "dtdss"};
    app.require_subcommand(1);

    auto* sim = app.add_subcommand("simulate", "Generate synthetic telemetry from the thermal plant");
    std::string sim_scenario, sim_plant, sim_output;
    std::optional<std::uint64_t> sim_seed;
    std::uint64_t sim_scenario_seed = 7;
    sim->add_option("scenario", sim_scenario, "Library scenario name or scenario JSON file")->required();
    sim->add_option("--plant", sim_plant, "Plant config file (key = value)");
    sim->add_option("-o,--output", sim_output, "Telemetry CSV path, stdout when omitted");
    sim->add_option("--seed", sim_seed, "Sensor-noise seed, overrides the plant config");
    sim->add_option("--scenario-seed", sim_scenario_seed, "Seed for randomized library scenarios");

    auto* rep = app.add_subcommand("replay", "Reconstruct irradiance from telemetry");
    std::string rep_input, rep_params, rep_output;
    bool rep_fixed = false;
    rep->add_option("telemetry", rep_input, "Telemetry CSV")->required();
    rep->add_option("--params", rep_params, "Params file (key = value)");
    rep->add_option("-o,--output", rep_output, "Estimates CSV path, stdout when omitted");
    rep->add_flag("--fixed-point", rep_fixed, "Use the integer pipeline");

    auto* cal = app.add_subcommand("calibrate", "Fit tau, t_rise or gain and write it to the params file");
    std::string cal_mode, cal_params, cal_reference, cal_column = "g_ref_wm2";
    std::vector<std::string> cal_inputs;
    std::optional<double> cal_rate;
    bool cal_dry = false;
    cal->add_option("mode", cal_mode, "tau, trise or gain")->required()->check(CLI::IsMember({"tau", "trise", "gain"}));
    cal->add_option("inputs", cal_inputs, "Step, dark (one per rate) or estimates/telemetry file")->required();
    cal->add_option("--params", cal_params, "Params file to update")->required();
    cal->add_option("--reference", cal_reference, "Reference CSV for gain from an estimates file");
    cal->add_option("--column", cal_column, "Reference column");
    cal->add_option("--rate", cal_rate, "Sampling rate (Hz) whose t_rise goes into the params file");
    cal->add_flag("--dry-run", cal_dry, "Print the fit without writing");

    auto* ev = app.add_subcommand("evaluate", "Compare estimates with a reference");
    std::string ev_input, ev_reference, ev_column = "g_ref_wm2", ev_est_column = "ghi_wm2", ev_output;
    double ev_min = calib::kMapeMinReference;
    ev->add_option("estimates", ev_input, "Estimates CSV")->required();
    ev->add_option("--reference", ev_reference, "Reference CSV, the estimates file itself when omitted");
    ev->add_option("--column", ev_column, "Reference column");
    ev->add_option("--estimate-column", ev_est_column, "Estimate column");
    ev->add_option("--min-reference", ev_min, "Smallest reference value scored (W/m^2)");
    ev->add_option("-o,--output", ev_output, "Report file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (sim->parsed()) return cmd_simulate(sim_scenario, sim_plant, sim_output, sim_seed, sim_scenario_seed, out, err);
        if (rep->parsed()) return cmd_replay(rep_input, rep_params, rep_output, rep_fixed, out, err);
        if (cal->parsed())
            return cmd_calibrate(cal_mode, cal_inputs, cal_params, cal_reference, cal_column, cal_rate, cal_dry, out, err);
        return cmd_evaluate(ev_input, ev_reference, ev_column, ev_est_column, ev_min, ev_output, out);
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return e.code() == ErrorCode::Usage ? kExitUsage : kExitFailure;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    std::vector<const char*> argv{"dtdss"};
    for (const auto& a : args) argv.push_back(a.c_str());
    return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace dtdss::cli
