#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "glasseg/datakit/sample.hpp"

namespace glasseg::datakit {

namespace fs = std::filesystem;

/// Reads an aligned triple. RGB is 8-bit color; thermal is a raw TIFF (16-bit or float,
/// min-max normalized on load) or a pre-normalized PNG (scaled by its bit depth). A thermal
/// image of different size is bilinearly resampled to the RGB size. Masks are binarized at 128.
RgbtSample load_pair(const fs::path& rgb_path, const fs::path& thermal_path,
                     const std::optional<fs::path>& mask_path = std::nullopt);

/// Writes rgb as 8-bit PNG, thermal as a float TIFF of pseudo-absolute temperatures
/// (15 + 20 * normalized, so reloading recovers the normalized values), mask as 0/255 PNG.
void save_pair(const RgbtSample& sample, const fs::path& rgb_path, const fs::path& thermal_path,
               const std::optional<fs::path>& mask_path);

/// RGB-ordered CV_32FC3 in [0,1].
cv::Mat3f load_rgb(const fs::path& path);
/// Normalized thermal image, bilinearly resampled to `target` when given.
cv::Mat1f load_thermal(const fs::path& path, std::optional<cv::Size> target = std::nullopt);

BinaryMask load_mask(const fs::path& path);
void save_mask(const BinaryMask& mask, const fs::path& path);

struct ManifestEntry {
    fs::path rgb;
    fs::path thermal;
    std::optional<fs::path> mask;
    std::string scene;
    std::string split;
};

/// Manifest: one comma-separated line per sample, `rgb_path,thermal_path,mask_path,scene_tag,split`.
/// Blank lines and lines starting with '#' are ignored, as is a leading header row that starts
/// with `rgb_path`. Relative paths resolve against the manifest's directory. mask_path may be empty.
std::vector<ManifestEntry> read_manifest(const fs::path& path);
void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries);

std::vector<RgbtSample> load_entries(const std::vector<ManifestEntry>& entries);
std::vector<RgbtSample> load_split(const fs::path& manifest, const std::string& split);

}  // namespace glasseg::datakit
