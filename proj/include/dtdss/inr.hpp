#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace dtdss::inr {

enum class DerivativeMode { CentralDifference, SavitzkyGolay };

struct InrConfig {
    double alpha_min = 0.05;
    double alpha_max = 0.5;
    double jerk_gain = 0.4;  // 1/K
    double tau = 30.0;       // s
    DerivativeMode derivative_mode = DerivativeMode::CentralDifference;
    int sg_window = 7;
    int sg_degree = 2;

    void validate() const;
    // Samples retained by the filter: 3 for central difference, sg_window otherwise.
    std::size_t window_length() const;
};

struct TimedValue {
    double timestamp = 0.0;
    double value = 0.0;
};

// clamp(jerk_gain * deviation, alpha_min, alpha_max).
double adaptive_alpha(double deviation, const InrConfig& config);

// (T[n+1] - T[n-1]) / (2 dt) over the last three entries of window.
double central_difference(std::span<const double> window, double dt);

// Least-squares polynomial slope at the centre sample of an odd window with
// arbitrary spacing. Used when sample spacing is too irregular for the
// fixed-coefficient kernels.
double local_polynomial_slope(std::span<const TimedValue> window, int degree);

// First-derivative Savitzky-Golay convolution weights for a uniform grid.
class SavitzkyGolayKernel {
public:
    SavitzkyGolayKernel(int window, int degree);

    int window() const { return static_cast<int>(weights_.size()); }
    int degree() const { return degree_; }
    std::span<const double> weights() const { return weights_; }

    // Slope at the window centre; samples.size() must equal window().
    double derivative(std::span<const double> samples, double dt) const;

private:
    std::vector<double> weights_;  // per unit sample spacing
    int degree_;
};

double savgol_derivative(std::span<const double> window, double dt, int degree);

struct InrState {
    double filtered_temp = 0.0;
    // (timestamp, filtered) pairs, oldest first, at most window_length().
    std::vector<TimedValue> window;
    std::vector<double> alphas;  // alpha applied to each window entry
    bool initialized = false;
};

struct InrOutput {
    double timestamp = 0.0;  // time the output refers to (window centre)
    double filtered_temp = 0.0;
    double derivative = 0.0;  // K/s
    double projected_temp = 0.0;
    double alpha_used = 0.0;
};

// Adaptive EMA followed by a windowed derivative and inertial projection.
//
// The derivative needs samples on both sides of the point it describes, so
// outputs trail the input by half a window and carry the centre timestamp.
// The first sample initialises the filter and is reported immediately with a
// zero derivative; later steps report nothing until the window is full.
class InertialFilter {
public:
    explicit InertialFilter(const InrConfig& config);
    InertialFilter(const InrConfig& config, InrState state);

    std::optional<InrOutput> step(double raw, double timestamp);

    const InrConfig& config() const { return config_; }
    const InrState& state() const { return state_; }
    void reset();

private:
    double window_derivative() const;

    InrConfig config_;
    std::optional<SavitzkyGolayKernel> kernel_;
    InrState state_;
};

// Functional form: copies the state, advances it one sample.
struct InrStepResult {
    InrState state;
    std::optional<InrOutput> output;
};
InrStepResult inr_step(const InrState& state, const InrConfig& config, double raw, double timestamp);

}  // namespace dtdss::inr
