#include "dtdss/calib.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <string>

#include "dtdss/error.hpp"

namespace dtdss::calib {
namespace {

void require_same_length(std::size_t a, std::size_t b) {
    if (a != b) raise(ErrorCode::InvalidInput, "series lengths differ");
}

template <typename Samples, typename TimeOf>
void require_increasing(const Samples& s, TimeOf time_of) {
    for (std::size_t i = 1; i < s.size(); ++i)
        if (!(time_of(s[i]) > time_of(s[i - 1]))) raise(ErrorCode::InvalidInput, "timestamps must strictly increase");
}

}  // namespace

TauEstimate estimate_tau(const StepResponseSeries& series) {
    const auto& s = series.samples;
    if (s.size() < kMinStepSamples) raise(ErrorCode::InvalidInput, "step response needs at least 30 samples");
    require_increasing(s, [](const TimedValue& v) { return v.timestamp; });

    // Last sample at the maximum, so a held plateau times from where it ends.
    auto peak_it = s.begin();
    for (auto it = s.begin(); it != s.end(); ++it)
        if (it->value >= peak_it->value) peak_it = it;
    const std::size_t peak = static_cast<std::size_t>(std::distance(s.begin(), peak_it));

    const std::size_t tail = std::max<std::size_t>(1, s.size() / 10);
    double final_value = 0.0;
    for (std::size_t i = s.size() - tail; i < s.size(); ++i) final_value += s[i].value;
    final_value /= static_cast<double>(tail);

    if (peak + 1 >= s.size()) raise(ErrorCode::NoStep, "series never cools after its maximum");
    const double drop = peak_it->value - final_value;
    if (!(drop > 0.0)) raise(ErrorCode::NoStep, "no decay after the maximum");
    if (drop < kMinDecay) raise(ErrorCode::InsufficientSignal, "decay smaller than 1 K");

    const double target = peak_it->value - kStepFraction * drop;
    for (std::size_t i = peak + 1; i < s.size(); ++i) {
        if (s[i].value > target) continue;
        const auto& a = s[i - 1];
        const auto& b = s[i];
        const double frac = (a.value - target) / (a.value - b.value);
        const double crossing = a.timestamp + frac * (b.timestamp - a.timestamp);

        TauEstimate est;
        est.tau = crossing - peak_it->timestamp;
        est.onset_time = peak_it->timestamp;
        est.peak = peak_it->value;
        est.final_value = final_value;
        double sq = 0.0;
        for (std::size_t j = peak; j < s.size(); ++j) {
            const double model = final_value + drop * std::exp(-(s[j].timestamp - est.onset_time) / est.tau);
            sq += (s[j].value - model) * (s[j].value - model);
        }
        est.residual = std::sqrt(sq / static_cast<double>(s.size() - peak));
        return est;
    }
    raise(ErrorCode::NoStep, "decay never reaches 63.2% of the drop");
}

double DarkSeries::sampling_rate() const {
    if (samples.size() < 2) raise(ErrorCode::InvalidInput, "dark series needs at least two samples");
    const double span = samples.back().timestamp - samples.front().timestamp;
    if (!(span > 0.0)) raise(ErrorCode::InvalidInput, "dark series has zero duration");
    return static_cast<double>(samples.size() - 1) / span;
}

double TriseTable::lookup(double rate_hz) const {
    if (entries.empty()) raise(ErrorCode::InvalidInput, "empty T_rise table");
    auto best = entries.begin();
    for (auto it = entries.begin(); it != entries.end(); ++it)
        if (std::abs(it->first - rate_hz) < std::abs(best->first - rate_hz)) best = it;
    return best->second;
}

TriseTable estimate_trise(std::span<const DarkSeries> series, double tau) {
    if (series.empty()) raise(ErrorCode::InvalidInput, "no dark series supplied");
    if (!(tau > 0.0)) raise(ErrorCode::InvalidInput, "tau must be positive");
    TriseTable table;
    for (const auto& ds : series) {
        const auto& s = ds.samples;
        const double rate = ds.sampling_rate();
        require_increasing(s, [](const DarkSample& v) { return v.timestamp; });
        if (s.back().timestamp - s.front().timestamp < kSettlingTaus * tau)
            raise(ErrorCode::InsufficientSettling, "dark series shorter than 5 tau");
        const std::size_t tail = std::max<std::size_t>(1, s.size() / 5);
        double acc = 0.0;
        for (std::size_t i = s.size() - tail; i < s.size(); ++i) acc += s[i].flux_temp - s[i].reference_temp;
        const double t_rise = acc / static_cast<double>(tail);
        if (!(t_rise >= 0.0 && t_rise <= kMaxTrise))
            raise(ErrorCode::InvalidInput, "self-heating offset " + std::to_string(t_rise) + " K outside [0, 5]");
        table.entries[rate] = t_rise;
    }
    return table;
}

GainFit fit_gain(std::span<const double> estimates, std::span<const double> references) {
    require_same_length(estimates.size(), references.size());
    if (estimates.size() < kMinGainSamples) raise(ErrorCode::InvalidInput, "gain fit needs at least 100 samples");
    double num = 0.0;
    double den = 0.0;
    std::size_t used = 0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        if (!(references[i] > kGainDaylightThreshold) || !std::isfinite(estimates[i])) continue;
        num += references[i] * estimates[i];
        den += estimates[i] * estimates[i];
        ++used;
    }
    if (used == 0 || !(den > 0.0)) raise(ErrorCode::NoSignal, "no daylight samples to fit a gain");
    GainFit fit;
    fit.gain = num / den;
    fit.samples = used;
    double sq = 0.0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        if (!(references[i] > kGainDaylightThreshold) || !std::isfinite(estimates[i])) continue;
        const double r = references[i] - fit.gain * estimates[i];
        sq += r * r;
    }
    fit.residual = std::sqrt(sq / static_cast<double>(used));
    return fit;
}

MapeResult mape(std::span<const double> references, std::span<const double> estimates, double min_reference) {
    require_same_length(references.size(), estimates.size());
    MapeResult r;
    double acc = 0.0;
    for (std::size_t i = 0; i < references.size(); ++i) {
        const double ref = references[i];
        if (std::abs(ref) < min_reference || ref == 0.0) {
            ++r.excluded;
            continue;
        }
        acc += std::abs(ref - estimates[i]) / std::abs(ref);
        ++r.included;
    }
    if (r.included == 0) raise(ErrorCode::UndefinedMetric, "no reference samples above the MAPE threshold");
    r.percent = 100.0 * acc / static_cast<double>(r.included);
    return r;
}

double rmse(std::span<const double> references, std::span<const double> estimates) {
    require_same_length(references.size(), estimates.size());
    if (references.empty()) raise(ErrorCode::UndefinedMetric, "RMSE of an empty series");
    double sq = 0.0;
    for (std::size_t i = 0; i < references.size(); ++i) {
        const double d = references[i] - estimates[i];
        sq += d * d;
    }
    return std::sqrt(sq / static_cast<double>(references.size()));
}

double r_squared(std::span<const double> references, std::span<const double> estimates) {
    require_same_length(references.size(), estimates.size());
    const std::size_t n = references.size();
    if (n < 3) raise(ErrorCode::UndefinedMetric, "R^2 needs at least 3 samples");
    double mr = 0.0;
    double me = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mr += references[i];
        me += estimates[i];
    }
    mr /= static_cast<double>(n);
    me /= static_cast<double>(n);
    double see = 0.0;
    double ser = 0.0;
    double srr = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double de = estimates[i] - me;
        const double dr = references[i] - mr;
        see += de * de;
        ser += de * dr;
        srr += dr * dr;
    }
    if (!(srr > 0.0)) raise(ErrorCode::UndefinedMetric, "reference series has zero variance");
    if (!(see > 0.0)) raise(ErrorCode::UndefinedMetric, "estimate series has zero variance");
    // Residual of ref = a + b est leaves SS_res = S_rr - S_er^2 / S_ee.
    return (ser * ser) / (see * srr);
}

}  // namespace dtdss::calib
