#include "dtdss/flux.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "dtdss/error.hpp"

namespace dtdss::flux {
namespace {

constexpr std::array<Flag, 6> kAllFlags = {Flag::ExceedsClearSky, Flag::PathDisagreement, Flag::NodeInversion,
                                           Flag::Clamped,         Flag::OutOfEnvelope,    Flag::Saturated};

}  // namespace

std::string_view flag_name(Flag f) {
    switch (f) {
        case Flag::ExceedsClearSky: return "exceeds_clearsky";
        case Flag::PathDisagreement: return "path_disagreement";
        case Flag::NodeInversion: return "node_inversion";
        case Flag::Clamped: return "clamped";
        case Flag::OutOfEnvelope: return "out_of_envelope";
        case Flag::Saturated: return "saturated";
    }
    return "unknown";
}

std::string FlagSet::to_string() const {
    std::string out;
    for (Flag f : kAllFlags) {
        if (!has(f)) continue;
        if (!out.empty()) out += '|';
        out += flag_name(f);
    }
    return out;
}

FlagSet FlagSet::parse(std::string_view text) {
    FlagSet set;
    while (!text.empty()) {
        const auto bar = text.find('|');
        const auto name = text.substr(0, bar);
        bool known = false;
        for (Flag f : kAllFlags) {
            if (flag_name(f) == name) {
                set.set(f);
                known = true;
            }
        }
        if (!known) raise(ErrorCode::InvalidInput, "unknown flag '" + std::string(name) + "'");
        if (bar == std::string_view::npos) break;
        text.remove_prefix(bar + 1);
    }
    return set;
}

void ReconstructionParams::validate() const {
    if (!(absorptivity > 0.0 && absorptivity <= 1.0)) raise(ErrorCode::InvalidInput, "absorptivity must be in (0, 1]");
    if (!(tau > 0.0)) raise(ErrorCode::InvalidInput, "tau must be positive");
    if (!(gain > 0.0)) raise(ErrorCode::InvalidInput, "gain must be positive");
    if (!(cloud_exponent > 0.0)) raise(ErrorCode::InvalidInput, "cloud exponent must be positive");
    if (!std::isfinite(t_rise)) raise(ErrorCode::InvalidInput, "t_rise must be finite");
    if (!(cloud_learning_rate >= 0.0 && cloud_learning_rate <= 1.0))
        raise(ErrorCode::InvalidInput, "cloud learning rate must be in [0, 1]");
    if (std::abs(site.latitude_deg) > 90.0 || std::abs(site.longitude_deg) > 180.0)
        raise(ErrorCode::InvalidInput, "site coordinates out of range");
    convection.validate();
    inr::InrConfig c = inr;
    c.tau = tau;
    c.validate();
}

double sol_air_excess(double delta_t, double tau, double dtdt, double t_rise) {
    if (!(tau > 0.0)) raise(ErrorCode::InvalidInput, "tau must be positive");
    return delta_t + tau * dtdt - t_rise;
}

double reconstruct_ghi(double h_c, double absorptivity, double t_sol, double gain) {
    if (!(absorptivity > 0.0)) raise(ErrorCode::InvalidInput, "absorptivity must be positive");
    return gain * (h_c / absorptivity) * t_sol;
}

double cloud_proxy(double relative_humidity, double k_cloud) {
    if (!(relative_humidity >= 0.0 && relative_humidity <= 100.0))
        raise(ErrorCode::InvalidInput, "relative humidity outside [0, 100]");
    return std::pow(relative_humidity / 100.0, k_cloud);
}

double baseline_ghi(double g_cs, double relative_humidity, double k_cloud) {
    if (!(relative_humidity >= 0.0 && relative_humidity <= 100.0))
        raise(ErrorCode::InvalidInput, "relative humidity outside [0, 100]");
    return g_cs * (1.0 - 0.75 * std::pow(relative_humidity / 100.0, 3.4 * k_cloud));
}

SanityResult sanity_check(const SanityInputs& in) {
    SanityResult r;
    if (in.ghi_raw > kClearSkyMargin * in.g_cs) r.flags.set(Flag::ExceedsClearSky);
    if (in.stable && std::abs(in.ghi_raw - in.baseline) > kDisagreementFraction * std::max(in.ghi_raw, in.baseline))
        r.flags.set(Flag::PathDisagreement);
    if (in.daylight && in.delta_t < 0.0) r.flags.set(Flag::NodeInversion);

    if (std::isnan(in.ghi_raw)) {
        r.ghi = 0.0;
        r.flags.set(Flag::Clamped);
        r.flags.set(Flag::OutOfEnvelope);
        return r;
    }
    r.ghi = std::clamp(in.ghi_raw, 0.0, kGhiCeiling);
    if (r.ghi != in.ghi_raw) r.flags.set(Flag::Clamped);
    return r;
}

double adapt_cloud_k(const CloudFeedbackInputs& in) {
    const double k = in.k_cloud;
    const bool finite = std::isfinite(in.ghi_reactive) && std::isfinite(in.ghi_baseline) && std::isfinite(in.g_cs);
    if (!finite || !(in.g_cs > 0.0) || !(in.zenith_deg < kCloudFeedbackZenithDeg)) return k;
    if (in.ghi_reactive == in.ghi_baseline) return k;
    const double r = in.relative_humidity / 100.0;
    // At r = 0 or 1 the baseline does not depend on k.
    if (!(r > 0.0 && r < 1.0)) return k;

    // Solve G_cs (1 - 0.75 r^(3.4 k*)) = G_reactive for k*.
    const double q = (1.0 - in.ghi_reactive / in.g_cs) / 0.75;
    double target;
    if (q <= 0.0) {
        target = kMaxCloudExponent;
    } else if (q >= 1.0) {
        target = kMinCloudExponent;
    } else {
        target = std::log(q) / (3.4 * std::log(r));
    }
    target = std::clamp(target, kMinCloudExponent, kMaxCloudExponent);
    return std::clamp(k + in.learning_rate * (target - k), kMinCloudExponent, kMaxCloudExponent);
}

double Pipeline::convective_coefficient_for(const ReconstructionParams& params, double rho, std::optional<double> wind) {
    const double effective_rho = params.density_scaling ? rho : params.convection.rho_reference;
    return convective_coefficient(params.convection, effective_rho, wind);
}

namespace {

inr::InrConfig filter_config(const ReconstructionParams& p) {
    inr::InrConfig c = p.inr;
    c.tau = p.tau;
    return c;
}

}  // namespace

Pipeline::Pipeline(const ReconstructionParams& params)
    : params_(params), filter_((params.validate(), filter_config(params))), k_cloud_(params.cloud_exponent) {}

FluxEstimate Pipeline::failed_estimate(const DifferentialSample& sample) const {
    FluxEstimate e;
    e.timestamp = sample.timestamp;
    e.ghi_raw = std::numeric_limits<double>::quiet_NaN();
    e.sol_air_excess = std::numeric_limits<double>::quiet_NaN();
    e.delta_t = sample.flux_temp - sample.reference.temperature;
    e.cloud_exponent = k_cloud_;
    e.flags.set(Flag::OutOfEnvelope);
    e.flags.set(Flag::Clamped);
    return e;
}

std::optional<FluxEstimate> Pipeline::step(const DifferentialSample& sample) {
    if (last_timestamp_ && !(sample.timestamp > *last_timestamp_))
        raise(ErrorCode::Ordering, "pipeline timestamps must strictly increase");

    Context ctx{};
    std::optional<inr::InrOutput> out;
    try {
        const auto air = psychro::air_properties(sample.reference);
        ctx.timestamp = sample.timestamp;
        ctx.delta_t = sample.flux_temp - sample.reference.temperature;
        ctx.h_c = convective_coefficient_for(params_, air.moist_density, sample.wind);
        // tau and T_rise both carry 1/h_c; they are stored at the reference point.
        const double lumped_scale = params_.convection.h_c_reference / ctx.h_c;
        ctx.tau = params_.tau * lumped_scale;
        ctx.t_rise = params_.t_rise * lumped_scale;
        if (!(ctx.tau > 0.0) || !std::isfinite(ctx.tau))
            raise(ErrorCode::InvalidInput, "reference conditions give no usable time constant");
        ctx.relative_humidity = sample.reference.relative_humidity;
        ctx.out_of_envelope = air.out_of_envelope;
        out = filter_.step(ctx.delta_t, sample.timestamp);
    } catch (const Error& err) {
        if (err.code() == ErrorCode::Ordering) throw;
        return failed_estimate(sample);
    }
    last_timestamp_ = sample.timestamp;

    const std::size_t capacity = filter_.config().window_length();
    contexts_.push_back(ctx);
    if (contexts_.size() > capacity) contexts_.pop_front();
    if (!out) return std::nullopt;

    // The first output refers to the first sample; later ones to the window centre.
    const Context& c = contexts_.size() == 1 ? contexts_.front() : contexts_[capacity / 2];

    FluxEstimate e;
    e.timestamp = out->timestamp;
    e.delta_t = c.delta_t;
    e.filtered_delta_t = out->filtered_temp;
    e.derivative = out->derivative;
    e.convective_coefficient = c.h_c;
    e.sol_air_excess = sol_air_excess(out->filtered_temp, c.tau, out->derivative, c.t_rise);
    e.ghi_raw = reconstruct_ghi(c.h_c, params_.absorptivity, e.sol_air_excess, params_.gain);

    const auto sun = solar_position(params_.site, e.timestamp);
    e.zenith_deg = sun.zenith_deg;
    e.clear_sky_ghi = clear_sky_ghi(params_.site, e.timestamp);
    e.daylight = sun.zenith_deg < kDaylightZenithDeg;
    e.cloud_exponent = k_cloud_;
    e.cloud_proxy = cloud_proxy(c.relative_humidity, k_cloud_);
    e.baseline_ghi = baseline_ghi(e.clear_sky_ghi, c.relative_humidity, k_cloud_);

    if (std::abs(e.derivative) < kStableSlope) {
        if (!stable_since_) stable_since_ = e.timestamp;
    } else {
        stable_since_.reset();
    }
    e.stable = stable_since_ && (e.timestamp - *stable_since_) >= kStableDuration;

    const auto checked = sanity_check({e.ghi_raw, e.baseline_ghi, e.clear_sky_ghi, e.delta_t, e.daylight, e.stable});
    e.ghi = checked.ghi;
    e.flags = checked.flags;
    if (c.out_of_envelope) e.flags.set(Flag::OutOfEnvelope);

    if (params_.adapt_cloud_exponent && !e.flags.has(Flag::ExceedsClearSky) && !e.flags.has(Flag::NodeInversion) &&
        !e.flags.has(Flag::OutOfEnvelope)) {
        k_cloud_ = adapt_cloud_k({k_cloud_, params_.cloud_learning_rate, c.relative_humidity, e.zenith_deg, e.ghi,
                                  e.baseline_ghi, e.clear_sky_ghi});
    }
    return e;
}

}  // namespace dtdss::flux
