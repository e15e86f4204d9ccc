#include "glasseg/datakit/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include <opencv2/imgproc.hpp>

#include "glasseg/core/errors.hpp"
#include "glasseg/datakit/thermal.hpp"

namespace glasseg::datakit {

namespace {

struct Grating {
    double fx, fy, phase;
    cv::Vec3d amplitude;
};

struct GlassRegion {
    cv::Mat1b footprint;
    double temperature;
    double gradient;
};

}  // namespace

RgbtSample synth_scene(std::uint64_t seed, cv::Size size, int n_glass_regions) {
    if (n_glass_regions < 0) throw InputError("synth_scene: n_glass_regions must be >= 0");
    if (size.width < 4 || size.height < 4) throw InputError("synth_scene: image too small");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

    const int rows = size.height;
    const int cols = size.width;
    constexpr double two_pi = 2.0 * std::numbers::pi;

    // Scene texture: a colour base plus oriented gratings and a few flat "objects".
    const cv::Vec3d base(uniform(0.3, 0.7), uniform(0.3, 0.7), uniform(0.3, 0.7));
    std::vector<Grating> gratings(6);
    for (auto& g : gratings) {
        const double freq = uniform(2.0, 9.0);
        const double theta = uniform(0.0, std::numbers::pi);
        g.fx = freq * std::cos(theta) / cols;
        g.fy = freq * std::sin(theta) / rows;
        g.phase = uniform(0.0, two_pi);
        g.amplitude = cv::Vec3d(uniform(-0.12, 0.12), uniform(-0.12, 0.12), uniform(-0.12, 0.12));
    }

    cv::Mat3f scene(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            cv::Vec3d v = base;
            for (const auto& g : gratings) v += g.amplitude * std::sin(two_pi * (g.fx * c + g.fy * r) + g.phase);
            scene(r, c) = cv::Vec3f(static_cast<float>(v[0]), static_cast<float>(v[1]), static_cast<float>(v[2]));
        }
    }
    const int n_objects = 3 + static_cast<int>(unit(rng) * 5.0);
    for (int k = 0; k < n_objects; ++k) {
        const int w = std::max(2, static_cast<int>(uniform(0.05, 0.3) * cols));
        const int h = std::max(2, static_cast<int>(uniform(0.05, 0.3) * rows));
        const int x = static_cast<int>(unit(rng) * (cols - w));
        const int y = static_cast<int>(unit(rng) * (rows - h));
        const cv::Scalar color(uniform(0.0, 1.0), uniform(0.0, 1.0), uniform(0.0, 1.0));
        cv::Mat3f patch = scene(cv::Rect(x, y, w, h));
        cv::addWeighted(patch, 0.3, cv::Mat3f(patch.size(), cv::Vec3f(color[0], color[1], color[2])), 0.7, 0.0,
                        patch);
    }
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            auto& px = scene(r, c);
            for (int ch = 0; ch < 3; ++ch) {
                px[ch] = static_cast<float>(std::clamp(px[ch] + 0.03 * gauss(rng), 0.0, 1.0));
            }
        }
    }

    // Heat sources make the thermal background differ from plain luminance.
    struct Blob { double x, y, sigma, amp; };
    std::vector<Blob> blobs(3);
    for (auto& b : blobs) b = {uniform(0.0, cols), uniform(0.0, rows), uniform(0.1, 0.3) * cols, uniform(-0.3, 0.3)};

    cv::Mat1f thermal(rows, cols);
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const auto& px = scene(r, c);
            const double lum = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
            double heat = 0.0;
            for (const auto& b : blobs) {
                const double d2 = (c - b.x) * (c - b.x) + (r - b.y) * (r - b.y);
                heat += b.amp * std::exp(-d2 / (2.0 * b.sigma * b.sigma));
            }
            thermal(r, c) = static_cast<float>(0.8 * lum + 0.2 * (0.5 + heat) + 0.02 * gauss(rng));
        }
    }

    // Glass: opaque to long-wave infrared, so the thermal camera sees a smooth pane.
    BinaryMask mask = BinaryMask::zeros(rows, cols);
    std::vector<GlassRegion> regions;
    for (int k = 0; k < n_glass_regions; ++k) {
        const int w = std::max(2, static_cast<int>(uniform(0.2, 0.5) * cols));
        const int h = std::max(2, static_cast<int>(uniform(0.2, 0.5) * rows));
        const int x = static_cast<int>(unit(rng) * (cols - w));
        const int y = static_cast<int>(unit(rng) * (rows - h));
        GlassRegion region{BinaryMask::zeros(rows, cols), uniform(0.35, 0.65), uniform(-0.05, 0.05)};
        if (unit(rng) < 0.5) {
            cv::rectangle(region.footprint, cv::Rect(x, y, w, h), cv::Scalar(1), cv::FILLED);
        } else {
            cv::ellipse(region.footprint, cv::Point(x + w / 2, y + h / 2), cv::Size(std::max(1, w / 2), std::max(1, h / 2)),
                        0.0, 0.0, 360.0, cv::Scalar(1), cv::FILLED);
        }
        regions.push_back(std::move(region));
    }
    for (const auto& region : regions) mask.setTo(1, region.footprint);
    // Overlapping panes merge into one surface that takes the first pane's temperature.
    cv::Mat1i labels;
    const int n_labels = cv::connectedComponents(mask, labels, 8, CV_32S);
    std::vector<const GlassRegion*> surface(static_cast<std::size_t>(n_labels), nullptr);
    for (const auto& region : regions) {
        for (int r = 0; r < rows; ++r) {
            for (int c = 0; c < cols; ++c) {
                auto& owner = surface[static_cast<std::size_t>(labels(r, c))];
                if (region.footprint(r, c) && owner == nullptr) owner = &region;
            }
        }
    }
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            if (!mask(r, c)) continue;
            const auto* region = surface[static_cast<std::size_t>(labels(r, c))];
            thermal(r, c) = static_cast<float>(region->temperature + region->gradient * c / cols + 0.004 * gauss(rng));
        }
    }

    RgbtSample sample;
    sample.rgb = scene;
    sample.thermal = normalize_thermal(RawThermal{cv::Mat1f(thermal * 20.0 + 15.0)});
    sample.mask = mask;
    sample.meta.source = "synth-" + std::to_string(seed);
    sample.meta.scene = "synthetic";
    sample.meta.area_ratio = area_ratio(mask);
    return sample;
}

}  // namespace glasseg::datakit
