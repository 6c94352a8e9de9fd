#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>

#include <json.hpp>

#include "rfpose/pose_eval.hpp"
#include "rfpose/radar_sim.hpp"
#include "rfpose/tensor_io.hpp"
#include "test_support.hpp"

using namespace rfpose;
namespace fs = std::filesystem;

namespace {

const std::string kCli = RFPOSE_CLI_PATH;
const fs::path kConfigDir = RFPOSE_CONFIG_DIR;

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / ("rfpose_cli_" + std::string(info->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    fs::path path(const std::string& name) const { return dir_ / name; }

    static int run(const std::string& args) {
        const std::string cmd = "RFPOSE_LOG=quiet " + kCli + " " + args + " >/dev/null 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    static void write(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

    static std::string radar_cfg() { return (kConfigDir / "radar.cfg").string(); }

    fs::path dir_;
};

RadarConfig shipped_radar() { return RadarConfig::from(KeyValueConfig::load(kConfigDir / "radar.cfg")); }

std::string keypoints_json(const std::vector<std::pair<double, double>>& offsets, double area = 400) {
    nlohmann::json frames = nlohmann::json::array();
    for (std::size_t f = 0; f < offsets.size(); ++f) {
        frames.push_back({{"frame", f},
                          {"area", area},
                          {"joints",
                           {{{"name", "neck"}, {"x", 20.0 + offsets[f].first}, {"y", 20.0}, {"v", 1}},
                            {{"name", "head"}, {"x", 20.0}, {"y", 10.0 + offsets[f].second}, {"v", 0}}}}});
    }
    return frames.dump();
}

}  // namespace

TEST_F(CliTest, SimulateEmptySceneWritesZeros) {
    write(path("empty.json"), R"({"targets": []})");
    ASSERT_EQ(run("simulate --scene " + path("empty.json").string() + " --config " + radar_cfg() +
                  " --frames 2 --output " + path("z.bin").string()),
              0);
    const auto bytes = read_file_bytes(path("z.bin"));
    const auto cfg = shipped_radar();
    EXPECT_EQ(bytes.size(), 2 * AdcLayout{}.frame_bytes(cfg));
    for (auto b : bytes) ASSERT_EQ(b, 0);
    EXPECT_TRUE(fs::exists(path("z.bin.manifest.json")));
}

TEST_F(CliTest, SimulateIsDeterministicPerSeed) {
    const auto scene = (kConfigDir / "scene_single.json").string();
    for (const char* name : {"a.bin", "b.bin"}) {
        ASSERT_EQ(run("simulate --scene " + scene + " --config " + radar_cfg() + " --frames 2 --seed 42 --output " +
                      path(name).string()),
                  0);
    }
    EXPECT_EQ(read_file_bytes(path("a.bin")), read_file_bytes(path("b.bin")));
    ASSERT_EQ(run("simulate --scene " + scene + " --config " + radar_cfg() + " --frames 2 --seed 43 --output " +
                  path("c.bin").string()),
              0);
    EXPECT_NE(read_file_bytes(path("a.bin")), read_file_bytes(path("c.bin")));
}

TEST_F(CliTest, HeatmapPeaksAtExpectedBins) {
    const auto cfg = shipped_radar();
    const double bin_r = kSpeedOfLight * cfg.sample_rate / (2 * cfg.chirp_slope * 64);
    const double bin_v = kSpeedOfLight / cfg.carrier_freq / (2 * cfg.chirp_interval() * 32);
    Target t{bin_r * 12, bin_v * 3, std::asin(0.25), 0.0, 500.0};
    nlohmann::json scene{{"seed", 3}, {"snr_db", 40},
                         {"targets", {{{"range", t.range}, {"radial_velocity", t.radial_velocity},
                                       {"azimuth", t.azimuth}, {"rcs_amplitude", t.rcs_amplitude}}}}};
    write(path("scene.json"), scene.dump());
    ASSERT_EQ(run("simulate --scene " + path("scene.json").string() + " --config " + radar_cfg() +
                  " --frames 1 --output " + path("h.bin").string()),
              0);
    const auto e = expected_bins(t, cfg);

    ASSERT_EQ(run("heatmap " + path("h.bin").string() + " --config " + radar_cfg() + " --branch rd --output " +
                  path("rd.tensor").string()),
              0);
    const auto rd = std::get<ComplexTensor>(read_tensor(path("rd.tensor")));
    ASSERT_EQ(rd.shape(), (Shape{1, 64, 32, 8}));
    std::size_t best = 0;
    for (std::size_t i = 0; i < rd.size(); ++i)
        if (std::abs(rd[i]) > std::abs(rd[best])) best = i;
    EXPECT_EQ(best / 8, rd.offset(0, e.range, e.doppler, 0) / 8);

    ASSERT_EQ(run("heatmap " + path("h.bin").string() + " --config " + radar_cfg() + " --output " +
                  path("fft.tensor").string()),
              0);
    const auto fft = std::get<ComplexTensor>(read_tensor(path("fft.tensor")));
    ASSERT_EQ(fft.shape(), (Shape{1, 64, 32, 8}));
    best = 0;
    for (std::size_t i = 0; i < fft.size(); ++i)
        if (std::abs(fft[i]) > std::abs(fft[best])) best = i;
    EXPECT_EQ(best, fft.offset(0, e.range, e.doppler, e.azimuth));

    ASSERT_EQ(run("heatmap " + path("h.bin").string() + " --config " + radar_cfg() +
                  " --doppler-keep 4 --doppler-window 0.5 --output " + path("s.tensor").string()),
              0);
    EXPECT_EQ(std::get<ComplexTensor>(read_tensor(path("s.tensor"))).shape(), (Shape{1, 64, 4, 8}));
}

TEST_F(CliTest, HeatmapOfZeroInputIsZero) {
    const auto cfg = shipped_radar();
    write_file_bytes(path("z.bin"), std::vector<std::uint8_t>(AdcLayout{}.frame_bytes(cfg), 0));
    ASSERT_EQ(run("heatmap " + path("z.bin").string() + " --config " + radar_cfg() + " --output " +
                  path("z.tensor").string()),
              0);
    const auto z_any = read_tensor(path("z.tensor"));
    for (const auto& z : std::get<ComplexTensor>(z_any).data()) ASSERT_EQ(z, Complex(0, 0));
}

TEST_F(CliTest, ExitCodesSeparateConfigFormatAndContract) {
    const auto cfg = shipped_radar();
    write_file_bytes(path("short.bin"), std::vector<std::uint8_t>(AdcLayout{}.frame_bytes(cfg) - 2, 0));
    EXPECT_EQ(run("heatmap " + path("short.bin").string() + " --config " + radar_cfg() + " --output " +
                  path("o.tensor").string()),
              3);
    write(path("bad.cfg"), "num_adc_samples = 64\n");
    EXPECT_EQ(run("heatmap " + path("short.bin").string() + " --config " + path("bad.cfg").string() + " --output " +
                  path("o.tensor").string()),
              2);
    EXPECT_EQ(run("heatmap --bogus"), 2);
    EXPECT_EQ(run(""), 2);

    write_tensor(path("a.tensor"), RealTensor({2, 2}, 1.0));
    write_tensor(path("b.tensor"), RealTensor({2, 3}, 1.0));
    EXPECT_EQ(run("fuse " + path("a.tensor").string() + " " + path("b.tensor").string() + " --output " +
                  path("f.tensor").string()),
              4);
}

TEST_F(CliTest, ProbmapSingleTargetAndZeroInput) {
    const auto cfg = shipped_radar();
    const double bin_r = kSpeedOfLight * cfg.sample_rate / (2 * cfg.chirp_slope * 64);
    Target t{bin_r * 15, 0.0, std::asin(-0.25), std::asin(0.5), 300.0};
    nlohmann::json scene{{"seed", 9}, {"snr_db", 35},
                         {"targets", {{{"range", t.range}, {"azimuth", t.azimuth}, {"elevation", t.elevation},
                                       {"rcs_amplitude", t.rcs_amplitude}}}}};
    write(path("scene.json"), scene.dump());
    for (const char* radar : {"horizontal", "vertical"}) {
        ASSERT_EQ(run("simulate --scene " + path("scene.json").string() + " --config " + radar_cfg() +
                      " --frames 2 --radar " + radar + " --output " + path(std::string(radar) + ".bin").string()),
                  0);
    }
    ASSERT_EQ(run("probmap " + path("horizontal.bin").string() + " " + path("vertical.bin").string() + " --config " +
                  radar_cfg() + " --cfar-config " + (kConfigDir / "pipeline.cfg").string() + " --emit-cfar --output " +
                  path("p.tensor").string()),
              0);
    const auto p = read_real_tensor(path("p.tensor"));
    std::ifstream sidecar_in(path("p.tensor.bins.json"));
    const auto sidecar = nlohmann::json::parse(sidecar_in);
    const auto e = expected_bins(t, cfg);
    const std::size_t A = p.extent(1), E = p.extent(2);
    int found = 0;
    for (std::size_t k = 0; k < p.extent(0); ++k) {
        double sum = 0;
        std::size_t best = 0;
        for (std::size_t i = 0; i < A * E; ++i) {
            sum += p[k * A * E + i];
            if (p[k * A * E + i] > p[k * A * E + best]) best = i;
        }
        EXPECT_NEAR(sum, 1.0, 1e-8);
        if (sidecar["bins"][k]["range_bin"] == e.range) {
            ++found;
            EXPECT_EQ(best / E, e.azimuth);
            EXPECT_EQ(best % E, e.elevation);
        }
    }
    EXPECT_EQ(found, 2);
    EXPECT_EQ(read_real_tensor(path("p.tensor.encoded.tensor")).extent(1), 64u);
    EXPECT_EQ(read_real_tensor(path("p.tensor.cfar_h.tensor")).shape(), (Shape{2, 64, 32}));

    write_file_bytes(path("z.bin"), std::vector<std::uint8_t>(AdcLayout{}.frame_bytes(cfg), 0));
    ASSERT_EQ(run("probmap " + path("z.bin").string() + " " + path("z.bin").string() + " --config " + radar_cfg() +
                  " --output " + path("pz.tensor").string()),
              0);
    EXPECT_EQ(read_real_tensor(path("pz.tensor")).extent(0), 0u);

    EXPECT_EQ(run("probmap " + path("z.bin").string() + " " + path("vertical.bin").string() + " --config " +
                  radar_cfg() + " --output " + path("pm.tensor").string()),
              3);
    EXPECT_EQ(run("probmap " + path("z.bin").string() + " " + path("z.bin").string() + " --config " + radar_cfg() +
                  " --pe-depth 7 --output " + path("pm.tensor").string()),
              2);
}

TEST_F(CliTest, EvalFixtures) {
    write(path("gt.json"), keypoints_json({{0, 0}, {0, 0}}));
    ASSERT_EQ(run("eval " + path("gt.json").string() + " " + path("gt.json").string() + " --oks-config " +
                  (kConfigDir / "oks.cfg").string() + " --output " + path("m.json").string()),
              0);
    std::ifstream m_in(path("m.json"));
    const auto m = nlohmann::json::parse(m_in);
    EXPECT_EQ(m["ap"], 1.0);

    // Neck offsets giving OKS 0.61 and 0.81 under the default sigmas.
    const double s = OksParams::defaults().sigmas[1];
    auto dx = [&](double o) { return std::sqrt(-2.0 * 400 * s * s * std::log(o)); };
    write(path("pred.json"), keypoints_json({{dx(0.61), 0}, {dx(0.81), 0}}));
    ASSERT_EQ(run("eval " + path("pred.json").string() + " " + path("gt.json").string() + " --output " +
                  path("m2.json").string()),
              0);
    std::ifstream m2_in(path("m2.json"));
    const auto m2 = nlohmann::json::parse(m2_in);
    EXPECT_EQ(m2["ap50"], 1.0);
    EXPECT_EQ(m2["ap75"], 0.5);
    EXPECT_EQ(m2["ap"], 0.5);

    write(path("noname.json"), R"([{"frame": 0, "area": 10, "joints": [{"x": 1, "y": 2, "v": 1}]}])");
    EXPECT_EQ(run("eval " + path("noname.json").string() + " " + path("gt.json").string() + " --output " +
                  path("m3.json").string()),
              3);
}

TEST_F(CliTest, FuseFiles) {
    std::mt19937_64 rng(5);
    const auto x = rfpose::testing::random_real({3, 4, 4}, rng, -1, 1);
    const auto y = rfpose::testing::random_real({3, 4, 4}, rng, -1, 1);
    write_tensor(path("x.tensor"), x);
    write_tensor(path("y.tensor"), y);
    write_tensor(path("zero.tensor"), RealTensor({3, 4, 4}));
    ASSERT_EQ(run("fuse " + path("zero.tensor").string() + " " + path("x.tensor").string() + " --output " +
                  path("zx.tensor").string()),
              0);
    EXPECT_EQ(read_file_bytes(path("zx.tensor")), read_file_bytes(path("x.tensor")));
    ASSERT_EQ(run("fuse " + path("x.tensor").string() + " " + path("y.tensor").string() + " --output " +
                  path("xy.tensor").string()),
              0);
    ASSERT_EQ(run("fuse " + path("y.tensor").string() + " " + path("x.tensor").string() + " --output " +
                  path("yx.tensor").string()),
              0);
    EXPECT_EQ(read_file_bytes(path("xy.tensor")), read_file_bytes(path("yx.tensor")));
    const auto sum = read_real_tensor(path("xy.tensor"));
    for (std::size_t i = 0; i < sum.size(); ++i) EXPECT_EQ(sum[i], x[i] + y[i]);
    EXPECT_EQ(run("fuse " + path("x.tensor").string() + " " + path("y.tensor").string() + " --layer 4 --output " +
                  path("bad.tensor").string()),
              4);
}

TEST_F(CliTest, ManifestRecordsDigestsAndSeed) {
    const auto scene = (kConfigDir / "scene_single.json").string();
    ASSERT_EQ(run("simulate --scene " + scene + " --config " + radar_cfg() + " --frames 1 --seed 8 --output " +
                  path("a.bin").string()),
              0);
    std::ifstream in(path("a.bin.manifest.json"));
    const auto m = nlohmann::json::parse(in);
    EXPECT_EQ(m["command"], "simulate");
    EXPECT_EQ(m["seed"], 8);
    EXPECT_EQ(m["outputs"][0]["file"], "a.bin");
    EXPECT_EQ(m["outputs"][0]["sha256"].get<std::string>().size(), 64u);
    EXPECT_EQ(m["config_hash"].get<std::string>().size(), 64u);
    EXPECT_TRUE(m["timestamps"].contains("started"));
}
