#pragma once

#include <filesystem>
#include <map>
#include <vector>

#include <json.hpp>
#include <opencv2/core.hpp>

#include "glasseg/core/image_types.hpp"

namespace glasseg::datakit {

/// Number of 8-connected foreground components.
int count_components(const BinaryMask& mask);

struct StatsOptions {
    int area_bins = 10;
    int location_size = 64;
};

struct DatasetStats {
    std::vector<double> area_bin_edges;  // area_bins + 1 edges spanning [0,1]
    std::vector<int> area_counts;        // last bin is closed on the right
    std::map<int, int> component_histogram;
    cv::Mat1d location_probability;
    int n_images = 0;

    std::vector<double> area_ratios;
    std::vector<int> component_counts;
};

/// Area-ratio histogram, component-count histogram and per-pixel glass frequency. Masks
/// are nearest-neighbour sampled at pixel centres of a location_size x location_size grid.
DatasetStats dataset_stats(const std::vector<BinaryMask>& masks, const StatsOptions& options = {});

nlohmann::json to_json(const DatasetStats& stats);

/// Writes stats.json, location_probability.png, area_histogram.png, component_histogram.png.
void write_stats(const DatasetStats& stats, const std::filesystem::path& out_dir);

}  // namespace glasseg::datakit
