#pragma once

#include <opencv2/core.hpp>

#include "glasseg/datakit/sample.hpp"

namespace glasseg::datakit {

/// Per-image min-max normalization to [0,1]. A constant image maps to all zeros.
/// Throws InputError on empty input or any non-finite reading.
cv::Mat1f normalize_thermal(const RawThermal& raw);

}  // namespace glasseg::datakit
