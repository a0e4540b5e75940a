#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "dtdss/cli.hpp"
#include "dtdss/io.hpp"
#include "support.hpp"

using namespace dtdss;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("dtdss_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    int run(const std::vector<std::string>& args) {
        out_.str({});
        err_.str({});
        return cli::run(args, out_, err_);
    }

    static std::string slurp(const std::string& p) {
        std::ifstream in(p);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

    fs::path dir_;
    std::ostringstream out_, err_;
};

io::KeyValueFile parse_report(const std::string& text) {
    std::istringstream in(text);
    return io::KeyValueFile::parse(in);
}

double report_value(const std::string& text, const std::string& key) {
    return io::parse_double(parse_report(text).get(key).value()).value();
}

}  // namespace

TEST(KeyValueFile, PreservesLayoutAndComments) {
    std::istringstream in("# site params\n\ngain = 2  # field fit\ntau_s=30\n");
    auto f = io::KeyValueFile::parse(in);
    EXPECT_EQ(f.get("gain"), "2");
    EXPECT_EQ(f.get("tau_s"), "30");
    EXPECT_FALSE(f.get("hc_ref"));
    f.set("tau_s", "28.5", "calibrate tau source=a.csv");
    f.set("tau_s", "28.4", "calibrate tau source=b.csv");
    f.set("hc_ref", "40");
    std::ostringstream out;
    f.write(out);
    EXPECT_EQ(out.str(),
              "# site params\n\ngain = 2  # field fit\n# fit: calibrate tau source=b.csv\ntau_s = 28.4\nhc_ref = 40\n");
}

TEST(KeyValueFile, RejectsMalformedLines) {
    std::istringstream bad("gain 2\n");
    EXPECT_DTDSS_ERROR(io::KeyValueFile::parse(bad), ErrorCode::InvalidInput);
    std::istringstream dup("gain = 1\ngain = 2\n");
    EXPECT_DTDSS_ERROR(io::KeyValueFile::parse(dup), ErrorCode::InvalidInput);
}

TEST(Params, RoundTripThroughFile) {
    flux::ReconstructionParams p;
    p.gain = 13.5;
    p.tau = 27.25;
    p.inr.derivative_mode = inr::DerivativeMode::SavitzkyGolay;
    p.inr.sg_window = 9;
    p.site = {6.9, 79.86, 5.5};
    p.density_scaling = false;
    std::stringstream ss;
    io::write_params(ss, p);
    const auto q = io::params_from(io::KeyValueFile::parse(ss));
    EXPECT_EQ(q.gain, 13.5);
    EXPECT_EQ(q.tau, 27.25);
    EXPECT_EQ(q.inr.derivative_mode, inr::DerivativeMode::SavitzkyGolay);
    EXPECT_EQ(q.inr.sg_window, 9);
    EXPECT_EQ(q.site.utc_offset_h, 5.5);
    EXPECT_FALSE(q.density_scaling);
    std::istringstream again(ss.str());
    const auto file = io::KeyValueFile::parse(again);
    for (auto key : io::params_keys()) EXPECT_TRUE(file.get(key)) << key;
}

TEST(Params, RejectsUnknownKeysAndBadValues) {
    std::istringstream unknown("gian = 3\n");
    EXPECT_DTDSS_ERROR(io::params_from(io::KeyValueFile::parse(unknown)), ErrorCode::InvalidInput);
    std::istringstream bad("gain = fast\n");
    EXPECT_DTDSS_ERROR(io::params_from(io::KeyValueFile::parse(bad)), ErrorCode::InvalidInput);
    std::istringstream invalid("gain = -1\n");
    EXPECT_DTDSS_ERROR(io::params_from(io::KeyValueFile::parse(invalid)), ErrorCode::InvalidInput);
}

TEST(Plant, RoundTripThroughFile) {
    plantsim::PlantConfig c;
    c.seed = 42;
    c.noise_sigma = 0.0;
    std::stringstream ss;
    io::write_plant(ss, c);
    const auto d = io::plant_from(io::KeyValueFile::parse(ss));
    EXPECT_EQ(d.seed, 42u);
    EXPECT_EQ(d.noise_sigma, 0.0);
    EXPECT_EQ(d.convection.h_c_reference, c.convection.h_c_reference);
}

TEST(Telemetry, SkipsAndCountsMalformedRows) {
    std::istringstream in(std::string(io::kTelemetryHeader) +
                          "\n0,25,50,1013.25,26,,\n10,25,50,1013.25,26,1.5,400\nbad,row\n10,25,50,1013,26,,\n"
                          "20,25,x,1013,26,,\n30,25,50,1013.25,26,,\n");
    const auto t = io::read_telemetry(in);
    EXPECT_EQ(t.records.size(), 3u);
    EXPECT_EQ(t.malformed, 3u);
    EXPECT_FALSE(t.records[0].wind_ms);
    EXPECT_EQ(t.records[1].wind_ms, 1.5);
    EXPECT_EQ(t.records[1].g_ref_wm2, 400.0);
    EXPECT_NEAR(t.records[0].to_sample().reference.temperature, 298.15, 1e-12);
    std::istringstream wrong("time,temp\n");
    EXPECT_DTDSS_ERROR(io::read_telemetry(wrong), ErrorCode::InvalidInput);
}

TEST_F(CliTest, SimulateDiurnalWritesAllRecords) {
    ASSERT_EQ(run({"simulate", "diurnal_clear", "-o", path("d.csv")}), 0) << err_.str();
    const auto t = io::read_telemetry(path("d.csv"));
    EXPECT_EQ(t.records.size(), 8640u);
    EXPECT_EQ(t.malformed, 0u);
    EXPECT_TRUE(t.has_truth);
    EXPECT_NE(out_.str().find("samples = 8640"), std::string::npos);
}

TEST_F(CliTest, SimulateDarkRoomHasNoTruthSignal) {
    ASSERT_EQ(run({"simulate", "dark_room", "-o", path("k.csv")}), 0);
    for (const auto& r : io::read_telemetry(path("k.csv")).records) ASSERT_EQ(r.g_true_wm2, 0.0);
}

TEST_F(CliTest, ExitCodes) {
    EXPECT_EQ(run({"simulate", "dark_room", "--plant", path("missing.cfg")}), 2);
    EXPECT_NE(err_.str().find("missing.cfg"), std::string::npos);
    EXPECT_EQ(run({"simulate", "no_such_scenario"}), 2);
    EXPECT_EQ(run({"frobnicate"}), 2);
    EXPECT_EQ(run({}), 2);
    EXPECT_EQ(run({"simulate", "dark_room", "-o", path("no/such/dir/k.csv")}), 1);
    write("bad.cfg", "tau_s = 0\n");
    ASSERT_EQ(run({"simulate", "step_response", "-o", path("s.csv")}), 0);
    EXPECT_EQ(run({"replay", path("s.csv"), "--params", path("bad.cfg")}), 2);
    write("ok.cfg", "gain = 1\n");
    write("flat.csv", std::string(io::kTelemetryHeader) + "\n" + [] {
        std::string rows;
        for (int i = 0; i < 100; ++i) rows += std::to_string(i) + ",25,50,1013.25,25,,\n";
        return rows;
    }());
    EXPECT_EQ(run({"calibrate", "tau", path("flat.csv"), "--params", path("ok.cfg")}), 1);
}

TEST_F(CliTest, ReplayAbortsOnTooManyMalformedRows) {
    std::string text = std::string(io::kTelemetryHeader) + "\n";
    for (int i = 0; i < 100; ++i) text += i % 10 == 0 ? "garbage\n" : std::to_string(i) + ",25,50,1013.25,26,,\n";
    write("t.csv", text);
    EXPECT_EQ(run({"replay", path("t.csv"), "-o", path("e.csv")}), 1);
    EXPECT_NE(err_.str().find("malformed"), std::string::npos);
    EXPECT_FALSE(fs::exists(path("e.csv")));
    text = std::string(io::kTelemetryHeader) + "\n";
    for (int i = 0; i < 100; ++i) text += i == 50 ? "garbage\n" : std::to_string(i) + ",25,50,1013.25,26,,\n";
    write("t.csv", text);
    EXPECT_EQ(run({"replay", path("t.csv"), "-o", path("e.csv")}), 0);
    EXPECT_NE(err_.str().find("skipped 1 malformed"), std::string::npos);
}

TEST_F(CliTest, ReplayOfNoiselessDarkRoomIsDark) {
    write("plant.cfg", "noise_sigma_k = 0\nquantization_k = 0\n");
    ASSERT_EQ(run({"simulate", "dark_room", "--plant", path("plant.cfg"), "-o", path("k.csv")}), 0);
    write("p.cfg", "t_rise_k = 1\n");
    ASSERT_EQ(run({"calibrate", "trise", path("k.csv"), "--params", path("p.cfg")}), 0) << err_.str();
    ASSERT_EQ(run({"replay", path("k.csv"), "--params", path("p.cfg"), "-o", path("a.csv")}), 0);
    EXPECT_NE(out_.str().find("malformed = 0"), std::string::npos);
    const auto t = io::read_table(path("a.csv"));
    EXPECT_EQ(t.rows(), 7199u);
    // Residue is the six significant digits t_rise_k is written with.
    for (double g : t.values[*t.column("ghi_wm2")]) ASSERT_LT(g, 1e-3);
}

TEST_F(CliTest, ReplayOfNoisyDarkRoomStaysAtTheNoiseFloor) {
    ASSERT_EQ(run({"simulate", "dark_room", "-o", path("k.csv")}), 0);
    write("p.cfg", "t_rise_k = 1\n");
    ASSERT_EQ(run({"calibrate", "trise", path("k.csv"), "--params", path("p.cfg")}), 0);
    ASSERT_EQ(run({"replay", path("k.csv"), "--params", path("p.cfg"), "-o", path("a.csv")}), 0);
    ASSERT_EQ(run({"replay", path("k.csv"), "--params", path("p.cfg"), "-o", path("b.csv")}), 0);
    EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
    const auto t = io::read_table(path("a.csv"));
    double sum = 0.0, hi = 0.0;
    for (double g : t.values[*t.column("ghi_wm2")]) {
        sum += g;
        hi = std::max(hi, g);
    }
    EXPECT_LT(sum / static_cast<double>(t.rows()), 0.5);
    EXPECT_LT(hi, 5.0);
}

TEST_F(CliTest, CalibrateWritesProvenance) {
    ASSERT_EQ(run({"simulate", "step_response", "-o", path("s.csv")}), 0);
    write("p.cfg", "# my params\ntau_s = 45\n");
    ASSERT_EQ(run({"calibrate", "tau", path("s.csv"), "--params", path("p.cfg")}), 0) << err_.str();
    const std::string text = slurp(path("p.cfg"));
    EXPECT_EQ(text.rfind("# my params\n# fit: calibrate tau source=s.csv at=", 0), 0u) << text;
    EXPECT_NE(text.find("residual="), std::string::npos);
    const double tau = io::params_from(io::KeyValueFile::load(path("p.cfg"))).tau;
    EXPECT_GT(tau, 10.0);
    EXPECT_LT(tau, 60.0);
    ASSERT_EQ(run({"calibrate", "tau", path("s.csv"), "--params", path("p.cfg"), "--dry-run"}), 0);
    EXPECT_EQ(slurp(path("p.cfg")), text);
}

TEST_F(CliTest, CalibrateTauOnExactExponential) {
    // Reference point at the file's own conditions so no normalization applies.
    std::string text = std::string(io::kTelemetryHeader) + "\n";
    for (int i = 0; i < 400; ++i) {
        const double dt = i < 20 ? 10.0 : 10.0 * std::exp(-(i - 20) / 30.0);
        text += std::to_string(i) + ",20,0,1013.25," + io::format_double(20.0 + dt) + ",,\n";
    }
    write("step.csv", text);
    const double rho = 101325.0 / (287.058 * 293.15);
    write("p.cfg", "rho_ref = " + io::format_double(rho) + "\n");
    ASSERT_EQ(run({"calibrate", "tau", path("step.csv"), "--params", path("p.cfg")}), 0) << err_.str();
    EXPECT_NEAR(io::load_params(path("p.cfg")).tau, 30.0, 1.0);
}

TEST_F(CliTest, CalibrateGainFromEstimates) {
    std::string est = std::string(io::kEstimatesHeader) + "\n", ref = std::string(io::kTelemetryHeader) + "\n";
    for (int i = 0; i < 300; ++i) {
        const double g = 900.0 * std::max(0.0, std::sin(i * 0.02));
        est += std::to_string(i * 10) + ".000," + io::format_double(g / 14) + "," + io::format_double(g / 14) + ",0,0,0,\n";
        ref += std::to_string(i * 10) + ".2,25,50,1013.25,26,," + io::format_double(g) + "\n";
    }
    write("est.csv", est);
    write("ref.csv", ref);
    write("p.cfg", "gain = 1\n");
    ASSERT_EQ(run({"calibrate", "gain", path("est.csv"), "--reference", path("ref.csv"), "--params", path("p.cfg")}), 0)
        << err_.str();
    EXPECT_NEAR(io::load_params(path("p.cfg")).gain, 14.0, 1e-3);
}

TEST_F(CliTest, CalibrateTriseOnIdenticalNodes) {
    std::string text = std::string(io::kTelemetryHeader) + "\n";
    for (int i = 0; i < 400; ++i) text += std::to_string(i) + ",25,50,1013.25,25,,\n";
    write("same.csv", text);
    write("p.cfg", "t_rise_k = 1\n");
    ASSERT_EQ(run({"calibrate", "trise", path("same.csv"), "--params", path("p.cfg")}), 0) << err_.str();
    EXPECT_EQ(io::load_params(path("p.cfg")).t_rise, 0.0);
}

TEST_F(CliTest, EvaluateAgainstItself) {
    ASSERT_EQ(run({"simulate", "diurnal_clear", "-o", path("d.csv")}), 0);
    ASSERT_EQ(run({"replay", path("d.csv"), "-o", path("e.csv")}), 0);
    ASSERT_EQ(run({"evaluate", path("e.csv"), "--reference", path("e.csv"), "--column", "ghi_wm2", "-o", path("r.txt")}), 0);
    const std::string report = slurp(path("r.txt"));
    EXPECT_EQ(report_value(report, "mape_pct"), 0.0);
    EXPECT_EQ(report_value(report, "rmse_wm2"), 0.0);
    EXPECT_EQ(report_value(report, "r_squared"), 1.0);
    EXPECT_GT(report_value(report, "samples_excluded"), 0.0);
    EXPECT_NE(report.find("7.2%"), std::string::npos);
    EXPECT_EQ(out_.str(), report);
}

TEST_F(CliTest, EvaluateWithoutOverlapIsAnAlignmentFailure) {
    write("e.csv", std::string(io::kEstimatesHeader) + "\n0.000,1,1,0,0,0,\n");
    write("r.csv", std::string(io::kTelemetryHeader) + "\n5,25,50,1013.25,26,,1\n");
    EXPECT_EQ(run({"evaluate", path("e.csv"), "--reference", path("r.csv")}), 1);
    EXPECT_NE(err_.str().find("alignment"), std::string::npos);
}

TEST_F(CliTest, SimulateReplayEvaluateRoundTrip) {
    ASSERT_EQ(run({"simulate", "cloud_transients", "-o", path("c.csv")}), 0);
    ASSERT_EQ(run({"replay", path("c.csv"), "-o", path("f.csv")}), 0);
    EXPECT_EQ(err_.str(), "");
    ASSERT_EQ(run({"replay", path("c.csv"), "--fixed-point", "-o", path("x.csv")}), 0);
    EXPECT_EQ(err_.str(), "");
    ASSERT_EQ(run({"evaluate", path("x.csv"), "--reference", path("f.csv"), "--column", "ghi_wm2", "--min-reference", "-1e9"}), 0);
    EXPECT_LT(report_value(out_.str(), "rmse_wm2"), 2.0);
    const auto a = io::read_table(path("f.csv")), b = io::read_table(path("x.csv"));
    ASSERT_EQ(a.rows(), b.rows());
    const auto& fa = a.values[*a.column("ghi_wm2")];
    const auto& fb = b.values[*b.column("ghi_wm2")];
    for (std::size_t i = 0; i < fa.size(); ++i) ASSERT_LE(std::abs(fa[i] - fb[i]), 8.0) << i;
}

TEST_F(CliTest, ScenarioFromJson) {
    write("s.json", R"({"name": "lamp", "duration": 600, "sample_interval": 2,
        "ambient_temp": 293.15,
        "irradiance": [{"shape": "step", "start": 0, "end": 600, "value": 0, "target": 500, "at": 120}],
        "wind": [{"shape": "noise", "value": 1.0, "amplitude": 0.2, "rate": 2, "seed": 4, "floor": 0}]})");
    ASSERT_EQ(run({"simulate", path("s.json"), "-o", path("l.csv")}), 0) << err_.str();
    const auto t = io::read_telemetry(path("l.csv"));
    EXPECT_EQ(t.records.size(), 300u);
    EXPECT_EQ(t.records.back().g_true_wm2, 500.0);
    write("broken.json", "{\"duration\": ");
    EXPECT_EQ(run({"simulate", path("broken.json")}), 2);
}
