#pragma once

#include <filesystem>

#include <opencv2/core.hpp>

#include "glasseg/apps/plane.hpp"

namespace glasseg::apps {

/// Depth in meters from a 16-bit PNG (millimeters) or a single-channel float TIFF (meters).
/// 0 marks invalid depth.
cv::Mat1f load_depth(const std::filesystem::path& path);

/// Writes by extension: .png as 16-bit millimeters (rounded, clamped to 65535), .tif/.tiff as float meters.
void save_depth(const cv::Mat1f& depth, const std::filesystem::path& path);

/// ASCII PLY point cloud of all valid pixels, back-projected with `intrinsics`.
void export_ply(const cv::Mat1f& depth, const CameraIntrinsics& intrinsics, const std::filesystem::path& path);

}  // namespace glasseg::apps
