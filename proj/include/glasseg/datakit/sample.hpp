#pragma once

#include <optional>
#include <string>

#include <opencv2/core.hpp>

#include "glasseg/core/image_types.hpp"

namespace glasseg::datakit {

struct SampleMeta {
    std::string source;  // file stem or generator id
    std::string scene;
    /// Glass pixels / total pixels, filled by the generator and the loader when a mask exists.
    std::optional<double> area_ratio;
};

/// One aligned RGB-thermal pair. rgb is RGB-ordered CV_32FC3 in [0,1]; thermal is
/// min-max normalized to [0,1]; mask, when present, holds 0/1 values of the same size.
struct RgbtSample {
    cv::Mat3f rgb;
    cv::Mat1f thermal;
    std::optional<BinaryMask> mask;
    SampleMeta meta;

    [[nodiscard]] cv::Size size() const { return rgb.size(); }
    [[nodiscard]] bool has_glass() const { return mask && cv::countNonZero(*mask) > 0; }
};

/// Absolute temperature readings (degrees C) before normalization.
struct RawThermal {
    cv::Mat1f values;
};

/// Throws InputError if any RgbtSample invariant is violated.
void validate(const RgbtSample& sample);

double area_ratio(const BinaryMask& mask);

}  // namespace glasseg::datakit
