#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>
#include <json.hpp>
#include <opencv2/imgcodecs.hpp>

#include "glasseg/cli/commands.hpp"

namespace fs = std::filesystem;
using glasseg::cli::kExitConfigError;
using glasseg::cli::kExitFailure;
using glasseg::cli::kExitOk;

namespace {

struct Outcome {
    int code;
    std::string out;
    std::string err;
};

Outcome run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = glasseg::cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

nlohmann::json read_json(const fs::path& p) {
    std::ifstream f(p);
    return nlohmann::json::parse(f);
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p);
    f << text;
}

const char* kTinyConfig = R"(seed: 3
deterministic: true
data:
  manifest: data/manifest.csv
model:
  backbone: tiny-test
  channels: 32
  heads: 4
  ffn_dim: 64
  dropout: 0.0
train:
  batch_size: 4
  total_epochs: 2
  lr_switch_epoch: 1
  lr_initial: 0.005
  checkpoint_every: 0
  validation_fraction: 0.0
  augment:
    crop_height: 64
    crop_width: 64
)";

class CliTest : public ::testing::Test {
protected:
    static fs::path root;

    static void SetUpTestSuite() {
        root = fs::temp_directory_path() / "glasseg_cli_test";
        fs::remove_all(root);
        fs::create_directories(root);
        const auto r = run({"synth", "--out", (root / "data").string(), "--count", "12", "--width", "64", "--height",
                            "64", "--scenes", "4", "--seed", "5"});
        ASSERT_EQ(r.code, kExitOk) << r.err;
        write_text(root / "cfg.yaml", kTinyConfig);
    }
};

fs::path CliTest::root;

}  // namespace

TEST_F(CliTest, SynthWritesManifestAndImages) {
    std::ifstream manifest(root / "data" / "manifest.csv");
    int train = 0, test = 0;
    for (std::string line; std::getline(manifest, line);) {
        if (line.ends_with(",train")) ++train;
        if (line.ends_with(",test")) ++test;
    }
    EXPECT_EQ(train + test, 12);
    EXPECT_EQ(test, 3);
    EXPECT_TRUE(fs::exists(root / "data" / "rgb"));
    EXPECT_TRUE(fs::exists(root / "data" / "thermal"));
    EXPECT_TRUE(fs::exists(root / "data" / "mask"));
}

TEST_F(CliTest, TrainEvalPredict) {
    const auto out = root / "run";
    auto r = run({"train", "--config", (root / "cfg.yaml").string(), "--out", out.string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_TRUE(fs::exists(out / "last.pt"));
    EXPECT_TRUE(fs::exists(out / "best.pt"));
    EXPECT_TRUE(fs::exists(out / "train_log.jsonl"));
    EXPECT_TRUE(fs::exists(out / "report.json"));
    const auto cfg = read_json(out / "config.json");
    EXPECT_EQ(cfg.at("model").at("input"), "rgbt");

    // Synthetic splits have glass in every image, so the glass-free columns are empty.
    r = run({"eval", "--config", (root / "cfg.yaml").string(), "--checkpoint", (out / "last.pt").string(), "--out",
             (root / "eval").string(), "--name", "tiny"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_NE(r.out.find("n/a"), std::string::npos) << r.out;
    const auto report = read_json(root / "eval" / "report.json");
    EXPECT_TRUE(report.at("without_glass").is_null());
    EXPECT_EQ(report.at("n_with"), 3);

    // Full-size frame: network input is rounded to /32 internally, outputs match the input.
    cv::Mat rgb(480, 640, CV_8UC3, cv::Scalar(90, 120, 150));
    cv::Mat1w thermal(480, 640, static_cast<std::uint16_t>(3000));
    thermal(cv::Rect(100, 100, 200, 150)).setTo(3500);
    cv::imwrite((root / "frame.png").string(), rgb);
    cv::imwrite((root / "frame_t.tiff").string(), thermal);
    r = run({"predict", "--checkpoint", (out / "last.pt").string(), "--rgb", (root / "frame.png").string(),
             "--thermal", (root / "frame_t.tiff").string(), "--out", (root / "pred").string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const auto prob = cv::imread((root / "pred" / "frame_prob.png").string(), cv::IMREAD_UNCHANGED);
    const auto mask = cv::imread((root / "pred" / "frame_mask.png").string(), cv::IMREAD_UNCHANGED);
    EXPECT_EQ(prob.size(), cv::Size(640, 480));
    EXPECT_EQ(mask.size(), cv::Size(640, 480));

    r = run({"predict", "--checkpoint", (out / "last.pt").string(), "--rgb", (root / "frame.png").string(), "--out",
             (root / "pred").string()});
    EXPECT_EQ(r.code, kExitFailure);
    EXPECT_NE(r.err.find("thermal"), std::string::npos) << r.err;
}

TEST_F(CliTest, RgbOnlyVariant) {
    const auto out = root / "rgb_only";
    auto r = run({"train", "--config", (root / "cfg.yaml").string(), "--variant", "rgb-only", "--set",
                  "train.total_epochs=1", "--set", "train.lr_switch_epoch=0", "--out", out.string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(read_json(out / "config.json").at("model").at("input"), "rgb-only");
    cv::imwrite((root / "only.png").string(), cv::Mat(96, 128, CV_8UC3, cv::Scalar(1, 2, 3)));
    r = run({"predict", "--checkpoint", (out / "last.pt").string(), "--rgb", (root / "only.png").string(), "--out",
             (root / "pred_rgb").string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    EXPECT_EQ(cv::imread((root / "pred_rgb" / "only_mask.png").string()).size(), cv::Size(128, 96));
}

TEST_F(CliTest, ConfigErrorsExitWithTwo) {
    write_text(root / "nomanifest.yaml", "model:\n  channels: 32\n");
    auto r = run({"train", "--config", (root / "nomanifest.yaml").string(), "--out", (root / "x").string()});
    EXPECT_EQ(r.code, kExitConfigError);
    EXPECT_NE(r.err.find("manifest"), std::string::npos) << r.err;

    write_text(root / "typo.yaml", "model:\n  chanels: 32\n");
    r = run({"train", "--config", (root / "typo.yaml").string()});
    EXPECT_EQ(r.code, kExitConfigError);
    EXPECT_NE(r.err.find(":2:"), std::string::npos) << r.err;

    r = run({"train", "--config", (root / "cfg.yaml").string(), "--set", "model.channels=30"});
    EXPECT_EQ(r.code, kExitConfigError);
    EXPECT_NE(r.err.find("--set"), std::string::npos) << r.err;

    r = run({"train", "--config", (root / "cfg.yaml").string(), "--variant", "no-such-variant"});
    EXPECT_EQ(r.code, kExitConfigError);

    EXPECT_EQ(run({"frobnicate"}).code, kExitConfigError);
    EXPECT_EQ(run({"train"}).code, kExitConfigError);
    EXPECT_EQ(run({"--help"}).code, kExitOk);
}

TEST_F(CliTest, StatsOnToySet) {
    const auto dir = root / "toy";
    fs::create_directories(dir);
    cv::Mat1b full(20, 30, static_cast<std::uint8_t>(255));
    cv::Mat1b half = cv::Mat1b::zeros(20, 30);
    half(cv::Rect(0, 0, 15, 20)).setTo(255);
    cv::imwrite((dir / "a.png").string(), full);
    cv::imwrite((dir / "b.png").string(), half);
    write_text(dir / "manifest.csv", "rgb/a.png,thermal/a.tiff,a.png,s,train\nrgb/b.png,thermal/b.tiff,b.png,s,train\n");
    const auto r = run({"stats", "--manifest", (dir / "manifest.csv").string(), "--out", (dir / "stats").string()});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const auto j = read_json(dir / "stats" / "stats.json");
    EXPECT_EQ(j.at("n_images"), 2);
    int total = 0;
    for (const auto& c : j.at("area_ratio_histogram").at("counts")) total += c.get<int>();
    EXPECT_EQ(total, 2);
    const auto loc = cv::imread((dir / "stats" / "location_probability.png").string(), cv::IMREAD_UNCHANGED);
    EXPECT_EQ(loc.size(), cv::Size(64, 64));
}

TEST_F(CliTest, CorrectDepth) {
    const auto dir = root / "depth";
    fs::create_directories(dir);
    cv::Mat1f depth(40, 50, 2.0f);
    cv::Mat1b mask = cv::Mat1b::zeros(40, 50);
    mask(cv::Rect(10, 10, 20, 15)).setTo(255);
    depth(cv::Rect(10, 10, 20, 15)).setTo(7.0f);
    cv::imwrite((dir / "d.tiff").string(), depth);
    cv::imwrite((dir / "m.png").string(), mask);
    const auto r = run({"correct-depth", "--depth", (dir / "d.tiff").string(), "--mask", (dir / "m.png").string(),
                        "--out", (dir / "fixed.tiff").string(), "--ply", (dir / "cloud.ply").string(), "--fx", "60",
                        "--fy", "60", "--cx", "25", "--cy", "20"});
    ASSERT_EQ(r.code, kExitOk) << r.err;
    const cv::Mat1f fixed = cv::imread((dir / "fixed.tiff").string(), cv::IMREAD_UNCHANGED);
    EXPECT_LE(cv::norm(fixed, cv::Mat1f(40, 50, 2.0f), cv::NORM_INF), 1e-5);
    const auto report = read_json(dir / "fixed.json");
    ASSERT_EQ(report.at("components").size(), 1u);
    EXPECT_TRUE(fs::exists(dir / "cloud.ply"));

    EXPECT_EQ(run({"correct-depth", "--depth", (dir / "missing.tiff").string(), "--mask", (dir / "m.png").string(),
                   "--out", (dir / "o.tiff").string(), "--fx", "60", "--fy", "60", "--cx", "25", "--cy", "20"})
                  .code,
              kExitFailure);
}
