#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "glasseg/core/image_types.hpp"

namespace glasseg::metrics {

/// Probabilities strictly above this value count as glass.
inline constexpr float kBinarizeThreshold = 0.5f;
inline constexpr double kDefaultBeta2 = 0.3;

struct ConfusionCounts {
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    std::int64_t tn = 0;
    std::int64_t fn = 0;

    [[nodiscard]] std::int64_t total() const { return tp + fp + tn + fn; }
    bool operator==(const ConfusionCounts&) const = default;
};

BinaryMask binarize(const ProbabilityMap& prob, float threshold = kBinarizeThreshold);

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt);

/// Mean |a - b| over pixels.
double mean_abs_diff(const cv::Mat1f& a, const cv::Mat1f& b);
/// MAE on continuous probabilities; no thresholding.
double mae(const ProbabilityMap& pred, const BinaryMask& gt);

/// 100 * tp / (tp + fp + fn). Two empty masks agree perfectly and score 100.
double iou(const BinaryMask& pred, const BinaryMask& gt);
double iou(const ConfusionCounts& counts);

/// IOU of the inverted masks, for images without glass.
double iou_star(const BinaryMask& pred, const BinaryMask& gt);

/// 100 * (1 - (TPR + TNR) / 2). When one class is absent from gt its rate is undefined
/// and dropped; the remaining rate then carries full weight.
double ber(const BinaryMask& pred, const BinaryMask& gt);
double ber(const ConfusionCounts& counts);

/// Maximum F-beta over thresholds t = k/255, k = 0..254, with pixels counted positive when
/// prob > t. Undefined precision or recall (0/0) is taken as 0.
double max_f_measure(const ProbabilityMap& pred, const BinaryMask& gt, double beta2 = kDefaultBeta2);

/// Fraction of glass-free images on which glass is predicted. An image counts when its
/// thresholded foreground fraction exceeds min_area (default: any pixel).
double fpr(std::span<const ProbabilityMap> predictions, double min_area = 0.0,
           float threshold = kBinarizeThreshold);

struct WithGlassMetrics {
    double mae = 0.0;
    double iou = 0.0;
    double f_beta = 0.0;
    double ber = 0.0;
};

struct WithoutGlassMetrics {
    double mae = 0.0;
    double iou_star = 0.0;
    double fpr = 0.0;
};

struct MetricsReport {
    std::optional<WithGlassMetrics> with_glass;
    std::optional<WithoutGlassMetrics> without_glass;
    double all_mae = 0.0;
    int n_with = 0;
    int n_without = 0;
};

struct EvalOptions {
    float threshold = kBinarizeThreshold;
    double beta2 = kDefaultBeta2;
    double fpr_min_area = 0.0;
};

/// Routes each image by gt emptiness: glass images get MAE/IOU/F-beta/BER, glass-free images
/// MAE/IOU*/FPR. Every metric is averaged per image; all_mae covers the union.
MetricsReport evaluate_split(std::span<const ProbabilityMap> predictions, std::span<const BinaryMask> gts,
                             const EvalOptions& options = {});

/// Full-dataset results published for the canonical RGB-T model (5551 real pairs). Not
/// reproducible on synthetic data; kept as the target for users who train on the real set.
MetricsReport published_rgbt_reference();

}  // namespace glasseg::metrics
