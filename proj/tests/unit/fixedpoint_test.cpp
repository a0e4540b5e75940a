#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "dtdss/fixedpoint.hpp"
#include "dtdss/plantsim.hpp"
#include "support.hpp"

using namespace dtdss;
using namespace dtdss::fixedpoint;

namespace {

flux::ReconstructionParams params() {
    flux::ReconstructionParams p;
    p.convection.h_c_reference = 50.0;
    p.tau = 28.0;
    p.t_rise = 1.0;
    p.gain = 14.0;
    p.inr.alpha_min = 0.2;
    p.inr.alpha_max = 1.0;
    p.inr.jerk_gain = 10.0;
    return p;
}

struct PairedRun {
    std::vector<double> float_ghi;
    std::vector<double> fixed_ghi;
    std::vector<FixedPipelineState> states;
};

PairedRun paired(const flux::ReconstructionParams& p, const std::vector<plantsim::SimulatedSample>& samples, double dt) {
    flux::Pipeline pipe(p);
    FixedPipeline fixed(p, dt);
    PairedRun r;
    for (const auto& s : samples) {
        const auto e = pipe.step(s.sample);
        const auto f = fixed.step(FixedPipeline::encode(p, s.sample));
        EXPECT_EQ(e.has_value(), f.has_value());
        r.states.push_back(fixed.state());
        if (e && f) {
            r.float_ghi.push_back(e->ghi);
            r.fixed_ghi.push_back(f->ghi);
        }
    }
    return r;
}

}  // namespace

TEST(QFormat, Validation) {
    EXPECT_NO_THROW(kQ10_6.validate());
    EXPECT_NO_THROW((QFormat{16, 16, false}.validate()));
    EXPECT_DTDSS_ERROR((QFormat{16, 16, true}.validate()), ErrorCode::InvalidInput);
    EXPECT_DTDSS_ERROR((QFormat{-1, 4, true}.validate()), ErrorCode::InvalidInput);
    EXPECT_EQ(kQ10_6.max_raw(), 65535);
    EXPECT_EQ(kQ10_6.min_raw(), -65536);
    EXPECT_EQ(kQ10_6.resolution(), 1.0 / 64.0);
}

TEST(ToFixed, Examples) {
    EXPECT_EQ(to_fixed(1.006, QFormat{5, 10, false}), 1030);
    EXPECT_EQ(to_fixed(0.0, kQ10_6), 0);
    EXPECT_EQ(to_fixed(1.0, kQ10_6), 64);
    EXPECT_EQ(to_fixed(-1.0, kQ10_6), -64);
}

TEST(ToFixed, RoundTripWithinHalfUlp) {
    std::mt19937 rng(6);
    for (const QFormat f : {kQ10_6, QFormat{2, 14, false}, kTemperatureFormat, QFormat{0, 31, true}}) {
        std::uniform_real_distribution<double> u(to_real(f.min_raw(), f), to_real(f.max_raw(), f));
        for (int i = 0; i < 2000; ++i) {
            const double v = u(rng);
            EXPECT_LE(std::abs(to_real(to_fixed(v, f), f) - v), std::ldexp(1.0, -f.fraction_bits - 1) * (1 + 1e-12));
        }
    }
}

TEST(ToFixed, RangeErrors) {
    EXPECT_DTDSS_ERROR(to_fixed(1024.0, kQ10_6), ErrorCode::Range);
    EXPECT_DTDSS_ERROR(to_fixed(-1025.0, kQ10_6), ErrorCode::Range);
    EXPECT_DTDSS_ERROR(to_fixed(-0.5, QFormat{4, 4, false}), ErrorCode::Range);
    EXPECT_DTDSS_ERROR(to_fixed(std::nan(""), kQ10_6), ErrorCode::Range);
}

TEST(FixedScale, Examples) {
    EXPECT_EQ(fixed_scale(1024, 1030, 10), 1030);
    EXPECT_EQ(fixed_scale(0, 12345, 7), 0);
    EXPECT_EQ(fixed_scale(-1024, 1030, 10), -1030);
    EXPECT_EQ(fixed_scale(5, 3, 0), 15);
}

TEST(FixedScale, RoundsHalfUp) {
    EXPECT_EQ(fixed_scale(3, 1, 1), 2);    // 1.5
    EXPECT_EQ(fixed_scale(-3, 1, 1), -1);  // -1.5
    EXPECT_EQ(fixed_scale(5, 1, 2), 1);    // 1.25
    EXPECT_EQ(fixed_scale(7, 1, 2), 2);    // 1.75
}

TEST(FixedScale, OverflowIsARangeError) {
    const auto big = std::numeric_limits<std::int32_t>::max();
    EXPECT_DTDSS_ERROR(fixed_scale(big, big, 0), ErrorCode::Range);
    EXPECT_DTDSS_ERROR(fixed_scale(1, 1, 70), ErrorCode::Range);
    EXPECT_NO_THROW(fixed_scale(big, big, 31));
}

TEST(Saturate, ClampsAndReports) {
    bool flag = false;
    EXPECT_EQ(saturate(5, flag), 5);
    EXPECT_FALSE(flag);
    EXPECT_EQ(saturate(std::int64_t{1} << 40, flag), std::numeric_limits<std::int32_t>::max());
    EXPECT_TRUE(flag);
    flag = false;
    EXPECT_EQ(saturate(-(std::int64_t{1} << 40), flag), std::numeric_limits<std::int32_t>::min());
    EXPECT_TRUE(flag);
}

TEST(FixedState, ByteBudget) {
    EXPECT_LE(FixedPipelineState::kReactiveBytes, 18u);
    EXPECT_LE(FixedPipelineState::kReferenceBytes, 14u);
    EXPECT_LE(FixedPipelineState::kSerializedBytes, 60u);
    // Two sensors sharing one reference block still fit.
    EXPECT_LE(2 * FixedPipelineState::kReactiveBytes + FixedPipelineState::kReferenceBytes, 60u);
    EXPECT_EQ(FixedPipelineState{}.serialize().size(), FixedPipelineState::kSerializedBytes);
}

TEST(FixedState, SerializationRoundTripAndLayout) {
    FixedPipelineState s;
    s.reactive.filtered = {-5, 0x01020304, std::numeric_limits<std::int32_t>::min()};
    s.reactive.drive_previous = 0xBEEF;
    s.reactive.count = 3;
    s.reactive.flags = 1;
    s.reference.ghi_per_kelvin = -123456;
    s.reference.drive = 0x1234;
    s.reference.half_inverse_drive = 0x0A0B;
    s.reference.refreshes = 7;
    const auto bytes = s.serialize();
    EXPECT_EQ(FixedPipelineState::deserialize(bytes), s);
    EXPECT_EQ(bytes[4], 0x04);  // little-endian, filtered[1] low byte first
    EXPECT_EQ(bytes[7], 0x01);
    EXPECT_EQ(bytes[12], 0xEF);
    EXPECT_EQ(bytes[13], 0xBE);
    EXPECT_EQ(bytes[14], 3);
    EXPECT_EQ(bytes[15], 1);
}

TEST(FixedPipeline, IdenticalConstantInputsSettleToDark) {
    const auto p = params();
    FixedPipeline fixed(p, 10.0);
    const auto t = static_cast<std::int32_t>(to_fixed(25.0, kTemperatureFormat));
    FixedInputs in{t, t, 19661};
    std::optional<FixedOutput> last;
    for (int i = 0; i < 50; ++i)
        if (auto o = fixed.step(in)) last = o;
    ASSERT_TRUE(last);
    EXPECT_EQ(last->ghi, 0);
    EXPECT_FALSE(last->saturated);
}

TEST(FixedPipeline, TracksFloatPipelineOnSyntheticStreams) {
    const auto p = params();
    plantsim::PlantConfig plant;
    for (const char* name : {"cloud_transients", "altitude_sweep", "diurnal_clear"}) {
        const auto scenario = plantsim::library_scenario(name, 3);
        const auto run = paired(p, plantsim::simulate(plant, scenario).samples, plant.sample_interval);
        double sq = 0;
        for (std::size_t i = 0; i < run.float_ghi.size(); ++i) {
            const double d = run.fixed_ghi[i] - run.float_ghi[i];
            EXPECT_LE(std::abs(d), 8.0) << name << " sample " << i;
            sq += d * d;
        }
        EXPECT_LE(std::sqrt(sq / static_cast<double>(run.float_ghi.size())), 2.0) << name;
    }
}

TEST(FixedPipeline, BitIdenticalReruns) {
    const auto p = params();
    plantsim::PlantConfig plant;
    auto scenario = plantsim::library_scenario("cloud_transients", 5);
    scenario.duration = 7200.0;
    const auto samples = plantsim::simulate(plant, scenario).samples;
    const auto a = paired(p, samples, 10.0);
    const auto b = paired(p, samples, 10.0);
    EXPECT_EQ(a.fixed_ghi, b.fixed_ghi);
    ASSERT_EQ(a.states.size(), b.states.size());
    for (std::size_t i = 0; i < a.states.size(); ++i) EXPECT_EQ(a.states[i].serialize(), b.states[i].serialize());
}

TEST(FixedPipeline, ResumesFromSerializedState) {
    const auto p = params();
    FixedPipeline one(p, 10.0), two(p, 10.0);
    std::mt19937 rng(2);
    std::uniform_int_distribution<std::int32_t> jitter(-20000, 20000);
    const std::int32_t base = to_fixed(30.0, kTemperatureFormat);
    for (int i = 0; i < 200; ++i) {
        const FixedInputs in{base, base + 1000000 + jitter(rng) * 10, static_cast<std::uint16_t>(19000 + i)};
        const auto a = one.step(in);
        if (i == 100) two.set_state(FixedPipelineState::deserialize(one.state().serialize()));
        if (i > 100) {
            const auto b = two.step(in);
            ASSERT_EQ(a.has_value(), b.has_value());
            if (a) EXPECT_EQ(a->ghi_raw, b->ghi_raw);
        }
    }
}

TEST(FixedPipeline, SaturationIsFlaggedNotWrapped) {
    auto p = params();
    p.gain = 100.0;
    FixedPipeline fixed(p, 10.0);
    const auto hi = static_cast<std::int32_t>(kTemperatureFormat.max_raw());
    const auto lo = static_cast<std::int32_t>(kTemperatureFormat.min_raw());
    bool saw = false;
    for (int i = 0; i < 20; ++i) {
        const FixedInputs in = i % 2 ? FixedInputs{lo, hi, 65535} : FixedInputs{hi, lo, 65535};
        if (auto o = fixed.step(in)) {
            EXPECT_GE(o->ghi, 0);
            EXPECT_LE(o->ghi, 1400);
            saw |= o->saturated;
        }
    }
    EXPECT_TRUE(saw);
    EXPECT_NE(fixed.state().reactive.flags & 1u, 0u);
}

TEST(FixedPipeline, MultiplierRefreshesOnlyOnLargeDriveChanges) {
    const auto p = params();
    FixedPipeline fixed(p, 10.0);
    const auto t = static_cast<std::int32_t>(to_fixed(25.0, kTemperatureFormat));
    std::uint16_t drive = 19661;  // about 1.2
    for (int i = 0; i < 100; ++i) fixed.step({t, t + 2000000, drive});
    EXPECT_EQ(fixed.state().reference.refreshes, 1);
    for (int i = 0; i < 100; ++i) fixed.step({t, t + 2000000, static_cast<std::uint16_t>(drive + 100)});
    EXPECT_EQ(fixed.state().reference.refreshes, 1);  // 0.5%
    for (int i = 0; i < 100; ++i) fixed.step({t, t + 2000000, static_cast<std::uint16_t>(drive + 400)});
    EXPECT_EQ(fixed.state().reference.refreshes, 2);  // 2%
}
