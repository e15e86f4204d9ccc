#pragma once

#include <cstdint>

#include "glasseg/datakit/sample.hpp"

namespace glasseg::datakit {

struct AugmentConfig {
    double flip_probability = 0.5;
    double scale_low = 0.75;
    double scale_high = 1.25;
    int crop_height = 384;
    int crop_width = 384;
    std::uint64_t rng_seed = 0;
    /// Zero-pad (bottom/right) when the resized image is smaller than the crop.
    bool pad_if_needed = true;

    void validate() const;
};

/// Random horizontal flip, isotropic rescale and crop, applied identically to rgb, thermal
/// and mask. Output size is always crop_height x crop_width. Deterministic in cfg.rng_seed.
RgbtSample augment(const RgbtSample& sample, const AugmentConfig& cfg);

}  // namespace glasseg::datakit
