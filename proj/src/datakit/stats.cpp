#include "glasseg/datakit/stats.hpp"

#include <algorithm>
#include <fstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "glasseg/core/errors.hpp"
#include "glasseg/datakit/sample.hpp"

namespace glasseg::datakit {

int count_components(const BinaryMask& mask) {
    require_binary(mask, "count_components");
    if (mask.empty()) return 0;
    cv::Mat labels;
    return cv::connectedComponents(mask, labels, 8, CV_32S) - 1;
}

DatasetStats dataset_stats(const std::vector<BinaryMask>& masks, const StatsOptions& options) {
    if (masks.empty()) throw InputError("dataset_stats: no masks given");
    if (options.area_bins < 1 || options.location_size < 1) throw ConfigError("dataset_stats: invalid options");

    DatasetStats stats;
    stats.n_images = static_cast<int>(masks.size());
    const int bins = options.area_bins;
    for (int i = 0; i <= bins; ++i) stats.area_bin_edges.push_back(static_cast<double>(i) / bins);
    stats.area_counts.assign(bins, 0);

    const int n = options.location_size;
    stats.location_probability = cv::Mat1d::zeros(n, n);

    for (const auto& mask : masks) {
        require_binary(mask, "dataset_stats");
        if (mask.empty()) throw InputError("dataset_stats: empty mask");

        const double ratio = area_ratio(mask);
        stats.area_ratios.push_back(ratio);
        stats.area_counts[std::min(static_cast<int>(ratio * bins), bins - 1)] += 1;

        const int components = count_components(mask);
        stats.component_counts.push_back(components);
        stats.component_histogram[components] += 1;

        for (int i = 0; i < n; ++i) {
            const int src_r = std::min(mask.rows - 1, static_cast<int>((i + 0.5) * mask.rows / n));
            for (int j = 0; j < n; ++j) {
                const int src_c = std::min(mask.cols - 1, static_cast<int>((j + 0.5) * mask.cols / n));
                stats.location_probability(i, j) += mask(src_r, src_c);
            }
        }
    }
    // Elementwise division; cv::Mat's operator/= multiplies by the reciprocal and rounds differently.
    for (auto& v : stats.location_probability) v /= static_cast<double>(masks.size());
    return stats;
}

nlohmann::json to_json(const DatasetStats& stats) {
    nlohmann::json j;
    j["n_images"] = stats.n_images;
    j["area_ratio_histogram"] = {{"bin_edges", stats.area_bin_edges}, {"counts", stats.area_counts}};
    nlohmann::json comps = nlohmann::json::object();
    for (const auto& [k, v] : stats.component_histogram) comps[std::to_string(k)] = v;
    j["component_histogram"] = comps;
    j["area_ratios"] = stats.area_ratios;
    j["component_counts"] = stats.component_counts;

    const auto& loc = stats.location_probability;
    j["location_probability"] = {{"rows", loc.rows}, {"cols", loc.cols}};
    std::vector<double> values(loc.begin(), loc.end());
    j["location_probability"]["values"] = values;
    return j;
}

namespace {

cv::Mat3b render_histogram(const std::vector<int>& counts, const std::string& title) {
    constexpr int kWidth = 480;
    constexpr int kHeight = 240;
    constexpr int kMargin = 24;
    cv::Mat3b canvas(kHeight, kWidth, cv::Vec3b(255, 255, 255));
    const int peak = counts.empty() ? 0 : *std::max_element(counts.begin(), counts.end());
    const double bar_w = static_cast<double>(kWidth - 2 * kMargin) / std::max<std::size_t>(1, counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i) {
        const int h = peak > 0 ? static_cast<int>((kHeight - 2 * kMargin) * counts[i] / static_cast<double>(peak)) : 0;
        const cv::Point p0(kMargin + static_cast<int>(i * bar_w) + 1, kHeight - kMargin - h);
        const cv::Point p1(kMargin + static_cast<int>((i + 1) * bar_w) - 1, kHeight - kMargin);
        cv::rectangle(canvas, p0, p1, cv::Scalar(180, 110, 40), cv::FILLED);
    }
    cv::line(canvas, {kMargin, kHeight - kMargin}, {kWidth - kMargin, kHeight - kMargin}, cv::Scalar(0, 0, 0));
    cv::putText(canvas, title, {kMargin, 16}, cv::FONT_HERSHEY_SIMPLEX, 0.45, cv::Scalar(0, 0, 0));
    return canvas;
}

}  // namespace

void write_stats(const DatasetStats& stats, const std::filesystem::path& out_dir) {
    std::filesystem::create_directories(out_dir);
    {
        std::ofstream out(out_dir / "stats.json");
        out << to_json(stats).dump(2) << '\n';
    }

    cv::Mat1b loc8;
    stats.location_probability.convertTo(loc8, CV_8U, 255.0);
    cv::imwrite((out_dir / "location_probability.png").string(), loc8);

    cv::imwrite((out_dir / "area_histogram.png").string(), render_histogram(stats.area_counts, "glass area ratio"));

    std::vector<int> comp_counts;
    if (!stats.component_histogram.empty()) {
        comp_counts.assign(stats.component_histogram.rbegin()->first + 1, 0);
        for (const auto& [k, v] : stats.component_histogram) comp_counts[k] = v;
    }
    cv::imwrite((out_dir / "component_histogram.png").string(),
                render_histogram(comp_counts, "connected components per image"));
}

}  // namespace glasseg::datakit
