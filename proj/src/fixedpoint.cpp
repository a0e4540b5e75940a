#include "dtdss/fixedpoint.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "dtdss/error.hpp"

namespace dtdss::fixedpoint {
namespace {

constexpr std::int64_t kInt32Max = std::numeric_limits<std::int32_t>::max();
constexpr std::int64_t kInt32Min = std::numeric_limits<std::int32_t>::min();
constexpr QFormat kMultiplierFormat{15, kMultiplierFractionBits, true};
constexpr QFormat kHalfInverseFormat{3, 13, false};
constexpr QFormat kAlphaFormat{1, kAlphaFractionBits, false};
constexpr QFormat kJerkFormat{15, 16, true};
constexpr int kMaxPercentDrift = 1;

std::uint16_t encode_u16(double v, const QFormat& f) { return static_cast<std::uint16_t>(to_fixed(v, f)); }

void put_le(std::uint8_t*& p, std::uint64_t v, int bytes) {
    for (int i = 0; i < bytes; ++i) *p++ = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint64_t get_le(const std::uint8_t*& p, int bytes) {
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(*p++) << (8 * i);
    return v;
}

}  // namespace

void QFormat::validate() const {
    if (integer_bits < 0 || fraction_bits < 0) raise(ErrorCode::InvalidInput, "negative Q-format bit count");
    const int width = integer_bits + fraction_bits + (is_signed ? 1 : 0);
    if (width <= 0 || width > 32) raise(ErrorCode::InvalidInput, "Q-format must use 1..32 bits");
}

std::int64_t QFormat::max_raw() const { return (std::int64_t{1} << (integer_bits + fraction_bits)) - 1; }

std::int64_t QFormat::min_raw() const { return is_signed ? -(std::int64_t{1} << (integer_bits + fraction_bits)) : 0; }

double QFormat::resolution() const { return std::ldexp(1.0, -fraction_bits); }

std::int64_t to_fixed(double value, const QFormat& format) {
    format.validate();
    if (!std::isfinite(value)) raise(ErrorCode::Range, "cannot encode a non-finite value");
    const double scaled = std::round(std::ldexp(value, format.fraction_bits));
    if (scaled > static_cast<double>(format.max_raw()) || scaled < static_cast<double>(format.min_raw()))
        raise(ErrorCode::Range, "value " + std::to_string(value) + " outside Q-format range");
    return static_cast<std::int64_t>(scaled);
}

double to_real(std::int64_t raw, const QFormat& format) { return std::ldexp(static_cast<double>(raw), -format.fraction_bits); }

std::int64_t round_shift(std::int64_t value, int shift) {
    if (shift <= 0) return value;
    return (value + (std::int64_t{1} << (shift - 1))) >> shift;
}

std::int32_t fixed_scale(std::int32_t raw, std::int32_t multiplier, int shift) {
    if (shift < 0 || shift > 62) raise(ErrorCode::Range, "shift out of range");
    const std::int64_t r = round_shift(static_cast<std::int64_t>(raw) * multiplier, shift);
    if (r > kInt32Max || r < kInt32Min) raise(ErrorCode::Range, "scaled value overflows int32");
    return static_cast<std::int32_t>(r);
}

std::int32_t saturate(std::int64_t value, bool& saturated) {
    if (value > kInt32Max) {
        saturated = true;
        return static_cast<std::int32_t>(kInt32Max);
    }
    if (value < kInt32Min) {
        saturated = true;
        return static_cast<std::int32_t>(kInt32Min);
    }
    return static_cast<std::int32_t>(value);
}

std::array<std::uint8_t, FixedPipelineState::kSerializedBytes> FixedPipelineState::serialize() const {
    std::array<std::uint8_t, kSerializedBytes> out{};
    std::uint8_t* p = out.data();
    for (auto f : reactive.filtered) put_le(p, static_cast<std::uint32_t>(f), 4);
    put_le(p, reactive.drive_previous, 2);
    put_le(p, reactive.count, 1);
    put_le(p, reactive.flags, 1);
    put_le(p, static_cast<std::uint32_t>(reference.ghi_per_kelvin), 4);
    put_le(p, reference.drive, 2);
    put_le(p, reference.half_inverse_drive, 2);
    put_le(p, reference.refreshes, 2);
    return out;
}

FixedPipelineState FixedPipelineState::deserialize(const std::array<std::uint8_t, kSerializedBytes>& bytes) {
    FixedPipelineState s;
    const std::uint8_t* p = bytes.data();
    for (auto& f : s.reactive.filtered) f = static_cast<std::int32_t>(static_cast<std::uint32_t>(get_le(p, 4)));
    s.reactive.drive_previous = static_cast<std::uint16_t>(get_le(p, 2));
    s.reactive.count = static_cast<std::uint8_t>(get_le(p, 1));
    s.reactive.flags = static_cast<std::uint8_t>(get_le(p, 1));
    s.reference.ghi_per_kelvin = static_cast<std::int32_t>(static_cast<std::uint32_t>(get_le(p, 4)));
    s.reference.drive = static_cast<std::uint16_t>(get_le(p, 2));
    s.reference.half_inverse_drive = static_cast<std::uint16_t>(get_le(p, 2));
    s.reference.refreshes = static_cast<std::uint16_t>(get_le(p, 2));
    return s;
}

FixedPipeline::FixedPipeline(const flux::ReconstructionParams& params, double sample_interval) : params_(params) {
    params_.validate();
    if (!(sample_interval > 0.0)) raise(ErrorCode::InvalidInput, "sample interval must be positive");
    const auto& inr = params_.inr;
    alpha_min_ = static_cast<std::int32_t>(to_fixed(inr.alpha_min, kAlphaFormat));
    alpha_max_ = static_cast<std::int32_t>(to_fixed(inr.alpha_max, kAlphaFormat));
    jerk_gain_ = static_cast<std::int32_t>(to_fixed(inr.jerk_gain, kJerkFormat));
    const double scale = params_.gain * params_.convection.h_c_reference / params_.absorptivity;
    derivative_multiplier_ =
        static_cast<std::int32_t>(to_fixed(scale * params_.tau / (2.0 * sample_interval), kMultiplierFormat));
    offset_ = static_cast<std::int32_t>(to_fixed(scale * params_.t_rise, kMultiplierFormat));
}

FixedInputs FixedPipeline::encode(const flux::ReconstructionParams& params, const flux::DifferentialSample& sample) {
    FixedInputs in;
    in.t_ref = static_cast<std::int32_t>(
        to_fixed(sample.reference.temperature - psychro::kCelsiusOffset, kTemperatureFormat));
    in.t_flux = static_cast<std::int32_t>(to_fixed(sample.flux_temp - psychro::kCelsiusOffset, kTemperatureFormat));
    const double rho = psychro::moist_air_density(sample.reference);
    const double effective_rho = params.density_scaling ? rho : params.convection.rho_reference;
    in.drive = encode_u16(params.convection.drive(effective_rho, sample.wind), kDriveFormat);
    return in;
}

void FixedPipeline::refresh(std::uint16_t drive) {
    // Slow path, runs only when the drive has moved by more than 1%.
    const double d = to_real(drive, kDriveFormat);
    if (!(d > 0.0)) raise(ErrorCode::InvalidInput, "convective drive must be positive");
    const double h_c = params_.convection.h_c_reference * std::sqrt(d / params_.convection.rho_reference);
    auto& ref = state_.reference;
    ref.ghi_per_kelvin = static_cast<std::int32_t>(
        to_fixed(std::min(params_.gain * h_c / params_.absorptivity, to_real(kMultiplierFormat.max_raw(), kMultiplierFormat)),
                 kMultiplierFormat));
    ref.drive = drive;
    ref.half_inverse_drive = encode_u16(std::min(0.5 / d, to_real(kHalfInverseFormat.max_raw(), kHalfInverseFormat)),
                                        kHalfInverseFormat);
    ref.refreshes = static_cast<std::uint16_t>(ref.refreshes + 1);
}

std::int32_t FixedPipeline::multiplier_for(std::uint16_t drive, bool& saturated) {
    const auto& ref = state_.reference;
    const std::int64_t drift = static_cast<std::int64_t>(drive) - ref.drive;
    if (ref.drive == 0 || 100 * std::abs(drift) > kMaxPercentDrift * static_cast<std::int64_t>(ref.drive)) {
        refresh(drive);
        return state_.reference.ghi_per_kelvin;
    }
    // A(d) ~ A(d_r) (1 + (d - d_r) / (2 d_r)).
    const std::int64_t a = ref.ghi_per_kelvin;
    const std::int64_t correction = round_shift(round_shift(a * drift, kDriveFormat.fraction_bits) * ref.half_inverse_drive,
                                                kHalfInverseFormat.fraction_bits);
    return saturate(a + correction, saturated);
}

std::optional<FixedOutput> FixedPipeline::step(const FixedInputs& in) {
    auto& r = state_.reactive;
    bool saturated = false;
    const std::int32_t delta = saturate(static_cast<std::int64_t>(in.t_flux) - in.t_ref, saturated);

    FixedOutput out;
    std::int32_t centre = 0;
    std::int64_t diff = 0;
    std::uint16_t centre_drive = in.drive;

    if (r.count == 0) {
        r.filtered = {delta, delta, delta};
        r.count = 1;
        centre = delta;
    } else {
        const std::int64_t error = static_cast<std::int64_t>(delta) - r.filtered[2];
        const std::int64_t deviation = error < 0 ? -error : error;
        const std::int64_t alpha =
            std::clamp<std::int64_t>(round_shift(static_cast<std::int64_t>(jerk_gain_) * deviation, kTemperatureFormat.fraction_bits),
                                     alpha_min_, alpha_max_);
        const std::int32_t next =
            saturate(r.filtered[2] + round_shift(alpha * saturate(error, saturated), kAlphaFractionBits), saturated);
        r.filtered = {r.filtered[1], r.filtered[2], next};
        if (r.count < 3) ++r.count;
        if (r.count < 3) {
            r.drive_previous = in.drive;
            if (saturated) r.flags |= 1u;
            return std::nullopt;
        }
        centre = r.filtered[1];
        diff = static_cast<std::int64_t>(r.filtered[2]) - r.filtered[0];
        centre_drive = r.drive_previous;
        out.centred = true;
    }
    r.drive_previous = in.drive;

    const std::int64_t multiplier = multiplier_for(centre_drive, saturated);
    const std::int64_t term_level = round_shift(multiplier * centre, kTemperatureFormat.fraction_bits);
    const std::int64_t term_slope = round_shift(static_cast<std::int64_t>(derivative_multiplier_) * diff,
                                                kTemperatureFormat.fraction_bits);
    const std::int64_t ghi_q16 = term_level + term_slope - offset_;
    out.ghi_raw = saturate(round_shift(ghi_q16, kMultiplierFractionBits), saturated);
    out.ghi = std::clamp<std::int32_t>(out.ghi_raw, 0, static_cast<std::int32_t>(flux::kGhiCeiling));
    if (saturated) r.flags |= 1u;
    out.saturated = saturated;
    return out;
}

}  // namespace dtdss::fixedpoint
