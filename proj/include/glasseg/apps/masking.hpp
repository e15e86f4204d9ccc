#pragma once

#include <opencv2/core.hpp>

#include "glasseg/core/image_types.hpp"

namespace glasseg::apps {

/// rgb * (1 - mask): zeroes every glass pixel and keeps the rest bit-identical. Works for any
/// element type and channel count.
cv::Mat mask_out_glass(const cv::Mat& rgb, const BinaryMask& glass_mask);

}  // namespace glasseg::apps
