#include "glasseg/metrics/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>

namespace glasseg::metrics {

namespace {

constexpr int kThresholdCount = 255;  // k/255 for k = 0..254

// Largest k in [0, 254] with p > k/255, or -1 if none.
int highest_threshold_below(float p) {
    const double v = static_cast<double>(p);
    int k = std::clamp(static_cast<int>(std::ceil(v * 255.0)) - 1, -1, kThresholdCount - 1);
    while (k + 1 < kThresholdCount && v > (k + 1) / 255.0) ++k;
    while (k >= 0 && !(v > k / 255.0)) --k;
    return k;
}

double f_beta(double precision, double recall, double beta2) {
    const double denom = beta2 * precision + recall;
    if (denom <= 0.0) return 0.0;
    return (1.0 + beta2) * precision * recall / denom;
}

}  // namespace

BinaryMask binarize(const ProbabilityMap& prob, float threshold) {
    BinaryMask out(prob.size());
    for (int r = 0; r < prob.rows; ++r) {
        const float* src = prob.ptr<float>(r);
        auto* dst = out.ptr<std::uint8_t>(r);
        for (int c = 0; c < prob.cols; ++c) dst[c] = src[c] > threshold ? 1 : 0;
    }
    return out;
}

ConfusionCounts confusion(const BinaryMask& pred, const BinaryMask& gt) {
    require_same_size(pred, gt, "confusion");
    require_binary(pred, "confusion(pred)");
    require_binary(gt, "confusion(gt)");
    ConfusionCounts k;
    for (int r = 0; r < gt.rows; ++r) {
        const auto* p = pred.ptr<std::uint8_t>(r);
        const auto* g = gt.ptr<std::uint8_t>(r);
        for (int c = 0; c < gt.cols; ++c) {
            if (g[c]) {
                p[c] ? ++k.tp : ++k.fn;
            } else {
                p[c] ? ++k.fp : ++k.tn;
            }
        }
    }
    return k;
}

double mean_abs_diff(const cv::Mat1f& a, const cv::Mat1f& b) {
    require_same_size(a, b, "mae");
    if (a.empty()) throw InputError("mae: empty maps");
    double sum = 0.0;
    for (int r = 0; r < a.rows; ++r) {
        const float* pa = a.ptr<float>(r);
        const float* pb = b.ptr<float>(r);
        for (int c = 0; c < a.cols; ++c) sum += std::abs(static_cast<double>(pa[c]) - static_cast<double>(pb[c]));
    }
    return sum / static_cast<double>(a.total());
}

double mae(const ProbabilityMap& pred, const BinaryMask& gt) {
    require_binary(gt, "mae(gt)");
    cv::Mat1f gtf;
    gt.convertTo(gtf, CV_32F);
    return mean_abs_diff(pred, gtf);
}

double iou(const ConfusionCounts& k) {
    const auto denom = k.tp + k.fp + k.fn;
    if (denom == 0) return 100.0;
    return 100.0 * static_cast<double>(k.tp) / static_cast<double>(denom);
}

double iou(const BinaryMask& pred, const BinaryMask& gt) { return iou(confusion(pred, gt)); }

double iou_star(const BinaryMask& pred, const BinaryMask& gt) {
    const ConfusionCounts k = confusion(pred, gt);
    // Inverting both masks swaps tp<->tn and fp<->fn.
    return iou(ConfusionCounts{k.tn, k.fn, k.tp, k.fp});
}

double ber(const ConfusionCounts& k) {
    const auto pos = k.tp + k.fn;
    const auto neg = k.tn + k.fp;
    if (pos == 0 && neg == 0) throw InputError("ber: empty image");
    if (pos == 0) return 100.0 * (1.0 - static_cast<double>(k.tn) / static_cast<double>(neg));
    if (neg == 0) return 100.0 * (1.0 - static_cast<double>(k.tp) / static_cast<double>(pos));
    const double tpr = static_cast<double>(k.tp) / static_cast<double>(pos);
    const double tnr = static_cast<double>(k.tn) / static_cast<double>(neg);
    return 100.0 * (1.0 - 0.5 * (tpr + tnr));
}

double ber(const BinaryMask& pred, const BinaryMask& gt) { return ber(confusion(pred, gt)); }

double max_f_measure(const ProbabilityMap& pred, const BinaryMask& gt, double beta2) {
    require_same_size(pred, gt, "max_f_measure");
    require_binary(gt, "max_f_measure(gt)");

    // hist_*[k]: pixels whose highest exceeded threshold index is k (k = -1 stored at 0).
    std::array<std::int64_t, kThresholdCount + 1> hist_pos{};
    std::array<std::int64_t, kThresholdCount + 1> hist_neg{};
    std::int64_t gt_pos = 0;
    for (int r = 0; r < pred.rows; ++r) {
        const float* p = pred.ptr<float>(r);
        const auto* g = gt.ptr<std::uint8_t>(r);
        for (int c = 0; c < pred.cols; ++c) {
            const int slot = highest_threshold_below(p[c]) + 1;
            if (g[c]) {
                ++hist_pos[slot];
                ++gt_pos;
            } else {
                ++hist_neg[slot];
            }
        }
    }

    // Walk thresholds from the highest down, accumulating pixels predicted positive.
    double best = 0.0;
    std::int64_t tp = 0;
    std::int64_t fp = 0;
    for (int k = kThresholdCount - 1; k >= 0; --k) {
        tp += hist_pos[k + 1];
        fp += hist_neg[k + 1];
        const double precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
        const double recall = gt_pos > 0 ? static_cast<double>(tp) / static_cast<double>(gt_pos) : 0.0;
        best = std::max(best, f_beta(precision, recall, beta2));
    }
    return best;
}

double fpr(std::span<const ProbabilityMap> predictions, double min_area, float threshold) {
    if (predictions.empty()) throw InputError("fpr: no glass-free images");
    int flagged = 0;
    for (const auto& pred : predictions) {
        if (pred.empty()) throw InputError("fpr: empty prediction");
        const double area = static_cast<double>(cv::countNonZero(binarize(pred, threshold))) /
                            static_cast<double>(pred.total());
        if (area > min_area) ++flagged;
    }
    return static_cast<double>(flagged) / static_cast<double>(predictions.size());
}

MetricsReport evaluate_split(std::span<const ProbabilityMap> predictions, std::span<const BinaryMask> gts,
                             const EvalOptions& options) {
    if (predictions.size() != gts.size()) throw InputError("evaluate_split: prediction/gt count mismatch");
    if (predictions.empty()) throw InputError("evaluate_split: no images");

    MetricsReport report;
    WithGlassMetrics with{};
    WithoutGlassMetrics without{};
    std::vector<ProbabilityMap> glass_free;
    double mae_sum = 0.0;

    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const auto& pred = predictions[i];
        const auto& gt = gts[i];
        const double m = mae(pred, gt);
        mae_sum += m;
        const BinaryMask bin = binarize(pred, options.threshold);
        if (cv::countNonZero(gt) > 0) {
            const ConfusionCounts k = confusion(bin, gt);
            with.mae += m;
            with.iou += iou(k);
            with.f_beta += max_f_measure(pred, gt, options.beta2);
            with.ber += ber(k);
            ++report.n_with;
        } else {
            without.mae += m;
            without.iou_star += iou_star(bin, gt);
            glass_free.push_back(pred);
            ++report.n_without;
        }
    }

    if (report.n_with > 0) {
        const double n = report.n_with;
        report.with_glass = WithGlassMetrics{with.mae / n, with.iou / n, with.f_beta / n, with.ber / n};
    }
    if (report.n_without > 0) {
        const double n = report.n_without;
        report.without_glass = WithoutGlassMetrics{without.mae / n, without.iou_star / n,
                                                   fpr(glass_free, options.fpr_min_area, options.threshold)};
    }
    report.all_mae = mae_sum / static_cast<double>(predictions.size());
    return report;
}

MetricsReport published_rgbt_reference() {
    MetricsReport r;
    r.with_glass = WithGlassMetrics{0.027, 93.80, 0.965, 4.078};
    r.without_glass = WithoutGlassMetrics{0.003, 99.73, 0.08};
    r.all_mae = 0.024;
    return r;
}

}  // namespace glasseg::metrics
