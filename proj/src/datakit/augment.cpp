#include "glasseg/datakit/augment.hpp"

#include <cmath>
#include <random>

#include <opencv2/imgproc.hpp>

#include "glasseg/core/errors.hpp"

namespace glasseg::datakit {

void AugmentConfig::validate() const {
    if (flip_probability < 0.0 || flip_probability > 1.0) {
        throw ConfigError("augment.flip_probability must lie in [0,1]");
    }
    if (!(scale_low > 0.0) || scale_low > scale_high) {
        throw ConfigError("augment scale range must satisfy 0 < low <= high");
    }
    if (crop_height <= 0 || crop_width <= 0) throw ConfigError("augment crop size must be positive");
}

namespace {

template <typename Mat>
Mat pad_to(const Mat& img, int rows, int cols) {
    if (img.rows >= rows && img.cols >= cols) return img;
    Mat out;
    cv::copyMakeBorder(img, out, 0, std::max(0, rows - img.rows), 0, std::max(0, cols - img.cols),
                       cv::BORDER_CONSTANT, cv::Scalar::all(0));
    return out;
}

}  // namespace

RgbtSample augment(const RgbtSample& sample, const AugmentConfig& cfg) {
    cfg.validate();
    if (!sample.mask) throw InputError("augment: training samples need a mask");

    std::mt19937_64 rng(cfg.rng_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const bool flip = unit(rng) < cfg.flip_probability;
    const double scale = cfg.scale_low + (cfg.scale_high - cfg.scale_low) * unit(rng);

    cv::Mat3f rgb = sample.rgb.clone();
    cv::Mat1f thermal = sample.thermal.clone();
    cv::Mat1f mask;
    sample.mask->convertTo(mask, CV_32F);

    if (flip) {
        cv::flip(rgb, rgb, 1);
        cv::flip(thermal, thermal, 1);
        cv::flip(mask, mask, 1);
    }

    const cv::Size scaled(static_cast<int>(std::lround(rgb.cols * scale)),
                          static_cast<int>(std::lround(rgb.rows * scale)));
    if (scaled != rgb.size()) {
        if (scaled.width < 1 || scaled.height < 1) throw InputError("augment: scale collapses the image");
        cv::resize(rgb, rgb, scaled, 0, 0, cv::INTER_LINEAR);
        cv::resize(thermal, thermal, scaled, 0, 0, cv::INTER_LINEAR);
        cv::resize(mask, mask, scaled, 0, 0, cv::INTER_LINEAR);
    }

    if (rgb.rows < cfg.crop_height || rgb.cols < cfg.crop_width) {
        if (!cfg.pad_if_needed) {
            throw InputError("augment: crop " + std::to_string(cfg.crop_height) + "x" +
                             std::to_string(cfg.crop_width) + " exceeds resized image " +
                             std::to_string(rgb.rows) + "x" + std::to_string(rgb.cols));
        }
        rgb = pad_to(rgb, cfg.crop_height, cfg.crop_width);
        thermal = pad_to(thermal, cfg.crop_height, cfg.crop_width);
        mask = pad_to(mask, cfg.crop_height, cfg.crop_width);
    }

    std::uniform_int_distribution<int> pick_row(0, rgb.rows - cfg.crop_height);
    std::uniform_int_distribution<int> pick_col(0, rgb.cols - cfg.crop_width);
    const int top = pick_row(rng);
    const int left = pick_col(rng);
    const cv::Rect roi(left, top, cfg.crop_width, cfg.crop_height);

    RgbtSample out;
    out.rgb = rgb(roi).clone();
    out.thermal = thermal(roi).clone();
    cv::min(cv::max(out.thermal, 0.0), 1.0, out.thermal);

    BinaryMask binary(roi.size());
    const cv::Mat1f mask_roi = mask(roi);
    for (int r = 0; r < binary.rows; ++r) {
        const float* src = mask_roi.ptr<float>(r);
        auto* dst = binary.ptr<std::uint8_t>(r);
        for (int c = 0; c < binary.cols; ++c) dst[c] = src[c] >= 0.5f ? 1 : 0;
    }
    out.meta = sample.meta;
    out.meta.area_ratio = area_ratio(binary);
    out.mask = std::move(binary);
    return out;
}

}  // namespace glasseg::datakit
