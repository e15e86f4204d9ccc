#pragma once

#include <string_view>

#include <opencv2/core.hpp>

#include "glasseg/core/errors.hpp"

namespace glasseg {

/// Single-channel mask whose values are exactly 0 or 1.
using BinaryMask = cv::Mat1b;
/// Single-channel map of per-pixel glass probabilities.
using ProbabilityMap = cv::Mat1f;

inline bool is_binary(const cv::Mat1b& mask) {
    for (int r = 0; r < mask.rows; ++r) {
        const auto* row = mask.ptr<std::uint8_t>(r);
        for (int c = 0; c < mask.cols; ++c) {
            if (row[c] > 1) return false;
        }
    }
    return true;
}

inline void require_binary(const cv::Mat1b& mask, std::string_view what) {
    if (!is_binary(mask)) {
        throw InputError(std::string(what) + ": mask values must be 0 or 1");
    }
}

inline void require_same_size(const cv::Mat& a, const cv::Mat& b, std::string_view what) {
    if (a.size() != b.size()) {
        throw InputError(std::string(what) + ": size mismatch (" + std::to_string(a.rows) + "x" +
                         std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                         std::to_string(b.cols) + ")");
    }
}

}  // namespace glasseg
