#include "dtdss/inr.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

#include "dtdss/error.hpp"

namespace dtdss::inr {
namespace {

constexpr int kMaxDegree = 3;
constexpr double kUniformTolerance = 0.10;

// Solves the (n x n) system a x = b in place with partial pivoting.
template <std::size_t N>
void solve_small(std::array<std::array<double, N>, N>& a, std::array<double, N>& b, std::size_t n) {
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        if (a[pivot][col] == 0.0) raise(ErrorCode::InvalidInput, "singular polynomial fit");
        std::swap(a[pivot], a[col]);
        std::swap(b[pivot], b[col]);
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a[r][col] / a[col][col];
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    for (std::size_t i = n; i-- > 0;) {
        double acc = b[i];
        for (std::size_t c = i + 1; c < n; ++c) acc -= a[i][c] * b[c];
        b[i] = acc / a[i][i];
    }
}

void check_degree(int degree) {
    if (degree < 1 || degree > kMaxDegree) raise(ErrorCode::InvalidInput, "polynomial degree must be 1..3");
}

}  // namespace

void InrConfig::validate() const {
    if (!(alpha_min > 0.0 && alpha_min <= alpha_max && alpha_max <= 1.0))
        raise(ErrorCode::InvalidInput, "alpha bounds must satisfy 0 < alpha_min <= alpha_max <= 1");
    if (!(jerk_gain >= 0.0) || !std::isfinite(jerk_gain)) raise(ErrorCode::InvalidInput, "jerk gain must be >= 0");
    if (!(tau > 0.0) || !std::isfinite(tau)) raise(ErrorCode::InvalidInput, "tau must be positive");
    if (derivative_mode == DerivativeMode::SavitzkyGolay) {
        if (sg_degree < 2 || sg_degree > 3) raise(ErrorCode::InvalidInput, "sg_degree must be 2 or 3");
        if (sg_window < 5 || sg_window % 2 == 0 || sg_window <= sg_degree)
            raise(ErrorCode::InvalidInput, "sg_window must be odd, >= 5 and > sg_degree");
    }
}

std::size_t InrConfig::window_length() const {
    return derivative_mode == DerivativeMode::SavitzkyGolay ? static_cast<std::size_t>(std::max(3, sg_window)) : 3;
}

double adaptive_alpha(double deviation, const InrConfig& config) {
    return std::clamp(config.jerk_gain * deviation, config.alpha_min, config.alpha_max);
}

double central_difference(std::span<const double> window, double dt) {
    if (window.size() < 3) raise(ErrorCode::InsufficientHistory, "central difference needs 3 samples");
    if (!(dt > 0.0)) raise(ErrorCode::InvalidInput, "dt must be positive");
    const std::size_t n = window.size();
    return (window[n - 1] - window[n - 3]) / (2.0 * dt);
}

double local_polynomial_slope(std::span<const TimedValue> window, int degree) {
    check_degree(degree);
    const std::size_t n = window.size();
    if (n % 2 == 0 || n < static_cast<std::size_t>(degree) + 1)
        raise(ErrorCode::InsufficientHistory, "polynomial slope needs an odd window larger than the degree");
    const double tc = window[n / 2].timestamp;
    const double scale = (window[n - 1].timestamp - window[0].timestamp) / static_cast<double>(n - 1);
    if (!(scale > 0.0)) raise(ErrorCode::Ordering, "window timestamps must increase");

    const std::size_t m = static_cast<std::size_t>(degree) + 1;
    std::array<std::array<double, kMaxDegree + 1>, kMaxDegree + 1> normal{};
    std::array<double, kMaxDegree + 1> rhs{};
    for (const auto& s : window) {
        const double x = (s.timestamp - tc) / scale;
        std::array<double, 2 * kMaxDegree + 1> powers{};
        powers[0] = 1.0;
        for (std::size_t k = 1; k < 2 * m - 1; ++k) powers[k] = powers[k - 1] * x;
        for (std::size_t r = 0; r < m; ++r) {
            rhs[r] += powers[r] * s.value;
            for (std::size_t c = 0; c < m; ++c) normal[r][c] += powers[r + c];
        }
    }
    solve_small(normal, rhs, m);
    return rhs[1] / scale;
}

SavitzkyGolayKernel::SavitzkyGolayKernel(int window, int degree) : degree_(degree) {
    check_degree(degree);
    if (window < 3 || window % 2 == 0 || window <= degree)
        raise(ErrorCode::InvalidInput, "Savitzky-Golay window must be odd and exceed the degree");
    const int half = window / 2;
    const std::size_t m = static_cast<std::size_t>(degree) + 1;

    // Row 1 of (J^T J)^{-1} J^T, with J the Vandermonde matrix on -half..half.
    std::array<std::array<double, kMaxDegree + 1>, kMaxDegree + 1> normal{};
    for (int k = -half; k <= half; ++k) {
        for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < m; ++c) normal[r][c] += std::pow(static_cast<double>(k), static_cast<double>(r + c));
    }
    std::array<double, kMaxDegree + 1> unit{};
    unit[1] = 1.0;
    solve_small(normal, unit, m);  // unit <- (J^T J)^{-1} e_1, the matrix is symmetric

    weights_.resize(static_cast<std::size_t>(window));
    for (int k = -half; k <= half; ++k) {
        double w = 0.0;
        for (std::size_t r = 0; r < m; ++r) w += unit[r] * std::pow(static_cast<double>(k), static_cast<double>(r));
        weights_[static_cast<std::size_t>(k + half)] = w;
    }
}

double SavitzkyGolayKernel::derivative(std::span<const double> samples, double dt) const {
    if (samples.size() != weights_.size())
        raise(ErrorCode::InsufficientHistory, "Savitzky-Golay window not full");
    if (!(dt > 0.0)) raise(ErrorCode::InvalidInput, "dt must be positive");
    double acc = 0.0;
    for (std::size_t i = 0; i < samples.size(); ++i) acc += weights_[i] * samples[i];
    return acc / dt;
}

double savgol_derivative(std::span<const double> window, double dt, int degree) {
    if (window.size() < 5) raise(ErrorCode::InsufficientHistory, "Savitzky-Golay needs at least 5 samples");
    return SavitzkyGolayKernel(static_cast<int>(window.size()), degree).derivative(window, dt);
}

InertialFilter::InertialFilter(const InrConfig& config) : InertialFilter(config, InrState{}) {}

InertialFilter::InertialFilter(const InrConfig& config, InrState state) : config_(config), state_(std::move(state)) {
    config_.validate();
    if (config_.derivative_mode == DerivativeMode::SavitzkyGolay)
        kernel_.emplace(config_.sg_window, config_.sg_degree);
    if (state_.window.size() > config_.window_length() || state_.alphas.size() != state_.window.size())
        raise(ErrorCode::InvalidInput, "filter state does not match configuration");
}

void InertialFilter::reset() { state_ = InrState{}; }

double InertialFilter::window_derivative() const {
    const auto& w = state_.window;
    const std::size_t n = w.size();
    const double mean_dt = (w.back().timestamp - w.front().timestamp) / static_cast<double>(n - 1);
    bool uniform = true;
    for (std::size_t i = 1; i < n; ++i) {
        const double h = w[i].timestamp - w[i - 1].timestamp;
        if (std::abs(h - mean_dt) > kUniformTolerance * mean_dt) uniform = false;
    }
    const int degree = config_.derivative_mode == DerivativeMode::SavitzkyGolay ? config_.sg_degree : 2;
    if (!uniform) return local_polynomial_slope(w, degree);

    std::array<double, 3> three{};
    std::vector<double> values;
    if (kernel_) {
        values.reserve(n);
        for (const auto& s : w) values.push_back(s.value);
        return kernel_->derivative(values, mean_dt);
    }
    for (std::size_t i = 0; i < 3; ++i) three[i] = w[n - 3 + i].value;
    return central_difference(three, mean_dt);
}

std::optional<InrOutput> InertialFilter::step(double raw, double timestamp) {
    if (!std::isfinite(raw) || !std::isfinite(timestamp))
        raise(ErrorCode::InvalidInput, "non-finite filter input");
    if (state_.initialized && timestamp <= state_.window.back().timestamp)
        raise(ErrorCode::Ordering, "timestamps must strictly increase");

    if (!state_.initialized) {
        state_.filtered_temp = raw;
        state_.window.assign(1, TimedValue{timestamp, raw});
        state_.alphas.assign(1, 1.0);
        state_.initialized = true;
        return InrOutput{timestamp, raw, 0.0, raw, 1.0};
    }

    const double deviation = std::abs(raw - state_.filtered_temp);
    const double alpha = adaptive_alpha(deviation, config_);
    state_.filtered_temp += alpha * (raw - state_.filtered_temp);

    const std::size_t capacity = config_.window_length();
    if (state_.window.size() == capacity) {
        state_.window.erase(state_.window.begin());
        state_.alphas.erase(state_.alphas.begin());
    }
    state_.window.push_back(TimedValue{timestamp, state_.filtered_temp});
    state_.alphas.push_back(alpha);
    if (state_.window.size() < capacity) return std::nullopt;

    const std::size_t centre = capacity / 2;
    InrOutput out;
    out.timestamp = state_.window[centre].timestamp;
    out.filtered_temp = state_.window[centre].value;
    out.derivative = window_derivative();
    out.projected_temp = out.filtered_temp + config_.tau * out.derivative;
    out.alpha_used = state_.alphas[centre];
    return out;
}

InrStepResult inr_step(const InrState& state, const InrConfig& config, double raw, double timestamp) {
    InertialFilter filter(config, state);
    auto output = filter.step(raw, timestamp);
    return InrStepResult{filter.state(), output};
}

}  // namespace dtdss::inr
