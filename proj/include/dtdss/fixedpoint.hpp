#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>

#include "dtdss/flux.hpp"

namespace dtdss::fixedpoint {

struct QFormat {
    int integer_bits = 0;
    int fraction_bits = 0;
    bool is_signed = true;

    void validate() const;  // total width <= 32 bits
    std::int64_t max_raw() const;
    std::int64_t min_raw() const;
    double resolution() const;
};

inline constexpr QFormat kQ10_6{10, 6, true};

// Round-to-nearest encoding; Range error when the value does not fit.
std::int64_t to_fixed(double value, const QFormat& format);
double to_real(std::int64_t raw, const QFormat& format);

// (raw * multiplier + 2^(shift-1)) >> shift with an arithmetic shift, i.e.
// round half up. Range error when the result leaves int32.
std::int32_t fixed_scale(std::int32_t raw, std::int32_t multiplier, int shift);

// Saturating helpers; `saturated` is set, never cleared.
std::int32_t saturate(std::int64_t value, bool& saturated);
std::int64_t round_shift(std::int64_t value, int shift);

// Formats used by the integer pipeline.
inline constexpr QFormat kTemperatureFormat{11, 20, true};  // deg C, 1e-6 K resolution
inline constexpr QFormat kDriveFormat{2, 14, false};        // rho * V / V_ref, kg/m^3
inline constexpr int kAlphaFractionBits = 16;
inline constexpr int kMultiplierFractionBits = 16;  // W/(m^2 K) and W/m^2 constants

struct FixedInputs {
    std::int32_t t_ref = 0;   // kTemperatureFormat
    std::int32_t t_flux = 0;  // kTemperatureFormat
    std::uint16_t drive = 0;  // kDriveFormat
};

// Reactive-path state for one flux sensor. Serialized little-endian in
// field order: filtered[0..2] (int32 each, oldest first), drive_previous
// (uint16), count (uint8), flags (uint8). 16 bytes.
struct ReactiveState {
    std::array<std::int32_t, 3> filtered{};
    std::uint16_t drive_previous = 0;
    std::uint8_t count = 0;
    std::uint8_t flags = 0;  // bit 0: saturation seen

    bool operator==(const ReactiveState&) const = default;
};

// Reference-path state shared by the sensor pair. Serialized little-endian
// in field order: ghi_per_kelvin (int32, Q16.16), drive (uint16, Q2.14),
// half_inverse_drive (uint16, Q3.13), refreshes (uint16). 10 bytes.
struct ReferenceState {
    std::int32_t ghi_per_kelvin = 0;  // gain * h_c / alpha at `drive`
    std::uint16_t drive = 0;
    std::uint16_t half_inverse_drive = 0;  // 1 / (2 drive)
    std::uint16_t refreshes = 0;

    bool operator==(const ReferenceState&) const = default;
};

struct FixedPipelineState {
    ReactiveState reactive;
    ReferenceState reference;

    static constexpr std::size_t kReactiveBytes = 16;
    static constexpr std::size_t kReferenceBytes = 10;
    static constexpr std::size_t kSerializedBytes = kReactiveBytes + kReferenceBytes;

    std::array<std::uint8_t, kSerializedBytes> serialize() const;
    static FixedPipelineState deserialize(const std::array<std::uint8_t, kSerializedBytes>& bytes);
    bool operator==(const FixedPipelineState&) const = default;
};

struct FixedOutput {
    std::int32_t ghi = 0;      // W/m^2, clamped to [0, 1400]
    std::int32_t ghi_raw = 0;  // W/m^2
    bool centred = false;      // refers to the previous sample rather than this one
    bool saturated = false;
};

// Integer mirror of the reactive path for a uniform sampling interval.
//
// Hot path uses add, multiply and shift only. gain, 1/alpha and h_c are folded
// into one multiplier that the slow path recomputes when the convective drive
// moves more than 1% from its last refresh; in between, the multiplier follows
// the drive to first order (h_c ~ sqrt(drive)).
class FixedPipeline {
public:
    FixedPipeline(const flux::ReconstructionParams& params, double sample_interval);

    std::optional<FixedOutput> step(const FixedInputs& in);

    const FixedPipelineState& state() const { return state_; }
    void set_state(const FixedPipelineState& s) { state_ = s; }

    // Slow path: float reference-path quantities encoded for the hot path.
    static FixedInputs encode(const flux::ReconstructionParams& params, const flux::DifferentialSample& sample);

    // Output scaling used by the hot path, exposed for tests.
    std::int32_t derivative_multiplier() const { return derivative_multiplier_; }
    std::int32_t offset() const { return offset_; }

private:
    void refresh(std::uint16_t drive);
    std::int32_t multiplier_for(std::uint16_t drive, bool& saturated);

    flux::ReconstructionParams params_;
    std::int32_t alpha_min_;
    std::int32_t alpha_max_;
    std::int32_t jerk_gain_;              // Q16.16, 1/K
    std::int32_t derivative_multiplier_;  // gain tau h_ref / (alpha 2 dt), Q16.16
    std::int32_t offset_;                 // gain T_rise h_ref / alpha, Q16.16 W/m^2
    FixedPipelineState state_;
};

}  // namespace dtdss::fixedpoint
