#pragma once

#include <cstdint>

#include <opencv2/core.hpp>

#include "glasseg/datakit/sample.hpp"

namespace glasseg::datakit {

/// Procedural RGB-thermal scene. The RGB image is textured everywhere, including through
/// glass. The thermal image repeats the scene texture outside glass and is a smooth,
/// nearly flat surface inside each glass region (rectangles and ellipses). The mask marks
/// exactly the generated regions. Bit-reproducible for a given seed.
RgbtSample synth_scene(std::uint64_t seed, cv::Size size, int n_glass_regions);

}  // namespace glasseg::datakit
