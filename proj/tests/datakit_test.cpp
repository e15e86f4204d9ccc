#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "glasseg/datakit/augment.hpp"
#include "glasseg/datakit/io.hpp"
#include "glasseg/datakit/stats.hpp"
#include "glasseg/datakit/synth.hpp"
#include "glasseg/datakit/thermal.hpp"
#include "support/oracles.hpp"

using namespace glasseg;
using namespace glasseg::datakit;
namespace fs = std::filesystem;

namespace {

cv::Mat1f row_of(std::initializer_list<float> v) { return cv::Mat1f(std::vector<float>(v), true).reshape(1, 1); }

fs::path scratch_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("glasseg_datakit_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

bool identical(const cv::Mat& a, const cv::Mat& b) {
    return a.size() == b.size() && a.type() == b.type() && cv::norm(a, b, cv::NORM_INF) == 0.0;
}

double variance(const cv::Mat1f& img, const cv::Mat1b& where) {
    cv::Scalar mean, stddev;
    cv::meanStdDev(img, mean, stddev, where);
    return stddev[0] * stddev[0];
}

}  // namespace

TEST(Thermal, NormalizationExamples) {
    auto out = normalize_thermal({row_of({0, 50, 100})});
    EXPECT_FLOAT_EQ(out(0, 0), 0.0f);
    EXPECT_FLOAT_EQ(out(0, 1), 0.5f);
    EXPECT_FLOAT_EQ(out(0, 2), 1.0f);

    out = normalize_thermal({cv::Mat1f(3, 4, 25.0f)});
    EXPECT_EQ(cv::countNonZero(out), 0);

    out = normalize_thermal({row_of({10, 20, 30, 40})});
    EXPECT_FLOAT_EQ(out(0, 1), 1.0f / 3.0f);
    EXPECT_FLOAT_EQ(out(0, 2), 2.0f / 3.0f);
    EXPECT_FLOAT_EQ(out(0, 3), 1.0f);
}

TEST(Thermal, RejectsNonFinite) {
    EXPECT_THROW(normalize_thermal({row_of({1, std::numeric_limits<float>::quiet_NaN()})}), InputError);
    EXPECT_THROW(normalize_thermal({row_of({1, std::numeric_limits<float>::infinity()})}), InputError);
    EXPECT_THROW(normalize_thermal({cv::Mat1f()}), InputError);
}

TEST(Thermal, IdempotentOnNormalized) {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    cv::Mat1f m(7, 9);
    for (auto& v : m) v = u(rng);
    m(0, 0) = 0.0f;
    m(6, 8) = 1.0f;
    EXPECT_LE(cv::norm(normalize_thermal({m}), m, cv::NORM_INF), 1e-6);
}

TEST(Io, SaveLoadRoundTrip) {
    const auto dir = scratch_dir("roundtrip");
    const auto s = synth_scene(11, {48, 32}, 2);
    save_pair(s, dir / "a.png", dir / "a.tiff", dir / "a_mask.png");
    const auto back = load_pair(dir / "a.png", dir / "a.tiff", dir / "a_mask.png");
    EXPECT_EQ(back.size(), s.size());
    EXPECT_LE(cv::norm(back.rgb, s.rgb, cv::NORM_INF), 0.5 / 255.0 + 1e-6);
    EXPECT_LE(cv::norm(back.thermal, s.thermal, cv::NORM_INF), 1e-4);
    ASSERT_TRUE(back.mask);
    EXPECT_TRUE(identical(*back.mask, *s.mask));
    EXPECT_EQ(back.meta.source, "a");
    EXPECT_NEAR(*back.meta.area_ratio, *s.meta.area_ratio, 1e-12);
}

TEST(Io, UpsamplesLowResolutionThermal) {
    const auto dir = scratch_dir("upsample");
    cv::Mat rgb(480, 640, CV_8UC3, cv::Scalar(10, 20, 30));
    cv::imwrite((dir / "rgb.png").string(), rgb);
    cv::Mat1w raw(120, 160);
    for (int r = 0; r < raw.rows; ++r) {
        for (int c = 0; c < raw.cols; ++c) raw(r, c) = static_cast<std::uint16_t>(1000 + 10 * c);
    }
    cv::imwrite((dir / "t.tiff").string(), raw);
    cv::Mat1b mask = cv::Mat1b::zeros(480, 640);
    mask(cv::Rect(100, 100, 50, 60)).setTo(255);
    cv::imwrite((dir / "m.png").string(), mask);

    const auto s = load_pair(dir / "rgb.png", dir / "t.tiff", dir / "m.png");
    EXPECT_EQ(s.thermal.size(), cv::Size(640, 480));
    double lo = 0.0, hi = 0.0;
    cv::minMaxLoc(s.thermal, &lo, &hi);
    EXPECT_GE(lo, 0.0);
    EXPECT_LE(hi, 1.0);
    // Columns increase monotonically left to right.
    EXPECT_LT(s.thermal(240, 10), s.thermal(240, 600));
    ASSERT_TRUE(s.mask);
    EXPECT_TRUE(is_binary(*s.mask));
    EXPECT_EQ(cv::countNonZero(*s.mask), 50 * 60);
}

TEST(Io, MissingFileIsInputError) {
    const auto dir = scratch_dir("missing");
    EXPECT_THROW(load_pair(dir / "nope.png", dir / "nope.tiff"), InputError);
}

TEST(Io, ManifestParsing) {
    const auto dir = scratch_dir("manifest");
    {
        std::ofstream f(dir / "manifest.csv");
        f << "rgb_path,thermal_path,mask_path,scene_tag,split\n"
          << "# comment\n\n"
          << "rgb/a.png,thermal/a.tiff,mask/a.png,s1,train\n"
          << "/abs/b.png,/abs/b.tiff,,s2,test\n";
    }
    const auto entries = read_manifest(dir / "manifest.csv");
    ASSERT_EQ(entries.size(), 2u);
    EXPECT_EQ(entries[0].rgb, dir / "rgb/a.png");
    EXPECT_EQ(entries[0].scene, "s1");
    EXPECT_EQ(entries[0].split, "train");
    EXPECT_TRUE(entries[0].mask);
    EXPECT_FALSE(entries[1].mask);
    EXPECT_EQ(entries[1].thermal, fs::path("/abs/b.tiff"));

    {
        std::ofstream f(dir / "bad.csv");
        f << "a.png,b.tiff\n";
    }
    EXPECT_THROW(read_manifest(dir / "bad.csv"), InputError);
}

TEST(Augment, IdentityConfig) {
    const auto s = synth_scene(3, {40, 30}, 1);
    AugmentConfig cfg;
    cfg.flip_probability = 0.0;
    cfg.scale_low = cfg.scale_high = 1.0;
    cfg.crop_height = 30;
    cfg.crop_width = 40;
    const auto out = augment(s, cfg);
    EXPECT_TRUE(identical(out.rgb, s.rgb));
    EXPECT_TRUE(identical(out.thermal, s.thermal));
    EXPECT_TRUE(identical(*out.mask, *s.mask));
}

TEST(Augment, FlipMirrorsColumns) {
    const auto s = synth_scene(4, {40, 30}, 2);
    AugmentConfig cfg;
    cfg.flip_probability = 1.0;
    cfg.scale_low = cfg.scale_high = 1.0;
    cfg.crop_height = 30;
    cfg.crop_width = 40;
    const auto out = augment(s, cfg);
    for (int r = 0; r < 30; ++r) {
        for (int c = 0; c < 40; ++c) {
            ASSERT_EQ((*out.mask)(r, c), (*s.mask)(r, 39 - c));
            ASSERT_EQ(out.thermal(r, c), s.thermal(r, 39 - c));
        }
    }
}

TEST(Augment, DeterministicAndWellFormed) {
    const auto s = synth_scene(5, {64, 48}, 3);
    AugmentConfig cfg;
    cfg.crop_height = 40;
    cfg.crop_width = 56;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        cfg.rng_seed = seed;
        const auto a = augment(s, cfg);
        const auto b = augment(s, cfg);
        EXPECT_TRUE(identical(a.rgb, b.rgb));
        EXPECT_TRUE(identical(*a.mask, *b.mask));
        EXPECT_EQ(a.size(), cv::Size(56, 40));
        EXPECT_EQ(a.thermal.size(), a.size());
        EXPECT_TRUE(is_binary(*a.mask));
        double lo = 0.0, hi = 0.0;
        cv::minMaxLoc(a.thermal, &lo, &hi);
        EXPECT_GE(lo, 0.0);
        EXPECT_LE(hi, 1.0);
    }
}

TEST(Augment, InvalidConfigs) {
    const auto s = synth_scene(5, {32, 32}, 1);
    AugmentConfig cfg;
    cfg.scale_low = 0.0;
    EXPECT_THROW(augment(s, cfg), ConfigError);
    cfg = {};
    cfg.scale_low = 1.5;
    cfg.scale_high = 1.0;
    EXPECT_THROW(augment(s, cfg), ConfigError);
    cfg = {};
    cfg.crop_height = 64;
    cfg.crop_width = 64;
    cfg.scale_low = cfg.scale_high = 1.0;
    cfg.pad_if_needed = false;
    EXPECT_THROW(augment(s, cfg), InputError);
    auto unlabeled = s;
    unlabeled.mask.reset();
    EXPECT_THROW(augment(unlabeled, AugmentConfig{}), InputError);
}

TEST(Synth, Properties) {
    const auto empty = synth_scene(1, {64, 48}, 0);
    EXPECT_EQ(cv::countNonZero(*empty.mask), 0);
    const auto one = synth_scene(1, {64, 48}, 1);
    EXPECT_EQ(count_components(*one.mask), 1);
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto s = synth_scene(seed, {96, 64}, 2);
        validate(s);
        const cv::Mat1b outside = 1 - *s.mask;
        const double outside_var = variance(s.thermal, outside);
        // Each region is its own smooth surface; compare region by region.
        cv::Mat1i labels;
        const int n = cv::connectedComponents(*s.mask, labels, 8);
        for (int k = 1; k < n; ++k) {
            const cv::Mat1b region = labels == k;
            EXPECT_LT(variance(s.thermal, region), outside_var) << seed << " region " << k;
        }
        const auto single = synth_scene(seed, {96, 64}, 1);
        EXPECT_LT(variance(single.thermal, *single.mask), variance(single.thermal, 1 - *single.mask)) << seed;
        EXPECT_NEAR(*s.meta.area_ratio, area_ratio(*s.mask), 1e-12);
    }
}

TEST(Synth, BitReproducible) {
    const auto a = synth_scene(77, {50, 40}, 3);
    const auto b = synth_scene(77, {50, 40}, 3);
    EXPECT_TRUE(identical(a.rgb, b.rgb));
    EXPECT_TRUE(identical(a.thermal, b.thermal));
    EXPECT_TRUE(identical(*a.mask, *b.mask));
    const auto c = synth_scene(78, {50, 40}, 3);
    EXPECT_FALSE(identical(a.rgb, c.rgb));
}

TEST(Components, Examples) {
    EXPECT_EQ(count_components(cv::Mat1b::zeros(5, 5)), 0);
    cv::Mat1b two = cv::Mat1b::zeros(10, 10);
    two(cv::Rect(0, 0, 3, 3)).setTo(1);
    two(cv::Rect(6, 6, 3, 3)).setTo(1);
    EXPECT_EQ(count_components(two), 2);
    cv::Mat1b diag = cv::Mat1b::zeros(3, 3);
    diag(0, 0) = 1;
    diag(1, 1) = 1;
    EXPECT_EQ(count_components(diag), 1);
}

TEST(Components, MatchesFloodFillAndSymmetries) {
    std::mt19937_64 rng(9);
    for (int i = 0; i < 200; ++i) {
        const auto m = oracle::random_mask(rng, 9 + i % 5, 7 + i % 3, 0.35);
        const int n = count_components(m);
        EXPECT_EQ(n, oracle::components(m));
        cv::Mat1b t, h, v;
        cv::transpose(m, t);
        cv::flip(m, h, 1);
        cv::flip(m, v, 0);
        EXPECT_EQ(count_components(t), n);
        EXPECT_EQ(count_components(h), n);
        EXPECT_EQ(count_components(v), n);
    }
}

TEST(Stats, Examples) {
    auto st = dataset_stats({cv::Mat1b::ones(30, 40)});
    EXPECT_EQ(st.n_images, 1);
    EXPECT_EQ(st.area_counts.back(), 1);
    EXPECT_EQ(st.location_probability.size(), cv::Size(64, 64));
    EXPECT_EQ(cv::norm(st.location_probability, cv::Mat1d::ones(64, 64), cv::NORM_INF), 0.0);

    st = dataset_stats({cv::Mat1b::ones(30, 40), cv::Mat1b::zeros(30, 40)});
    EXPECT_EQ(cv::norm(st.location_probability, cv::Mat1d(64, 64, 0.5), cv::NORM_INF), 0.0);
    EXPECT_EQ(st.area_counts.front(), 1);
    EXPECT_EQ(st.component_histogram.at(0), 1);
    EXPECT_EQ(st.component_histogram.at(1), 1);

    EXPECT_THROW(dataset_stats({}), InputError);
}

TEST(Stats, HistogramsSumToImageCount) {
    std::mt19937_64 rng(10);
    std::vector<BinaryMask> masks;
    for (int i = 0; i < 25; ++i) masks.push_back(oracle::random_mask(rng, 20 + i, 30, 0.05 * (i % 10)));
    StatsOptions opt;
    opt.area_bins = 7;
    opt.location_size = 16;
    const auto st = dataset_stats(masks, opt);
    EXPECT_EQ(st.area_bin_edges.size(), 8u);
    int area_total = 0, comp_total = 0;
    for (int c : st.area_counts) area_total += c;
    for (auto [k, c] : st.component_histogram) comp_total += c;
    EXPECT_EQ(area_total, 25);
    EXPECT_EQ(comp_total, 25);
    for (double r : st.area_ratios) {
        EXPECT_GE(r, 0.0);
        EXPECT_LE(r, 1.0);
    }
    double lo = 0.0, hi = 0.0;
    cv::minMaxLoc(st.location_probability, &lo, &hi);
    EXPECT_GE(lo, 0.0);
    EXPECT_LE(hi, 1.0);
}
