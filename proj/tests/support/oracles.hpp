#pragma once

// Independent reference implementations used by the unit and acceptance tests. They favour
// obviousness over speed and share no code with the library.

#include <cmath>
#include <cstdint>
#include <queue>
#include <random>
#include <vector>

#include <opencv2/core.hpp>

namespace oracle {

struct Counts {
    std::int64_t tp = 0, fp = 0, tn = 0, fn = 0;
};

inline Counts count(const cv::Mat1b& pred, const cv::Mat1b& gt) {
    Counts k;
    for (int r = 0; r < gt.rows; ++r) {
        for (int c = 0; c < gt.cols; ++c) {
            const bool p = pred(r, c) != 0;
            const bool g = gt(r, c) != 0;
            if (p && g) ++k.tp;
            if (p && !g) ++k.fp;
            if (!p && !g) ++k.tn;
            if (!p && g) ++k.fn;
        }
    }
    return k;
}

inline cv::Mat1b threshold(const cv::Mat1f& prob, double t) {
    cv::Mat1b out(prob.size());
    for (int r = 0; r < prob.rows; ++r) {
        for (int c = 0; c < prob.cols; ++c) out(r, c) = static_cast<double>(prob(r, c)) > t ? 1 : 0;
    }
    return out;
}

inline double mae(const cv::Mat1f& prob, const cv::Mat1b& gt) {
    double s = 0.0;
    for (int r = 0; r < gt.rows; ++r) {
        for (int c = 0; c < gt.cols; ++c) s += std::fabs(static_cast<double>(prob(r, c)) - gt(r, c));
    }
    return s / static_cast<double>(gt.total());
}

inline double iou(const Counts& k) {
    const auto u = k.tp + k.fp + k.fn;
    return u == 0 ? 100.0 : 100.0 * static_cast<double>(k.tp) / static_cast<double>(u);
}

inline double iou_star(const cv::Mat1b& pred, const cv::Mat1b& gt) {
    cv::Mat1b ip(pred.size()), ig(gt.size());
    for (int r = 0; r < gt.rows; ++r) {
        for (int c = 0; c < gt.cols; ++c) {
            ip(r, c) = pred(r, c) ? 0 : 1;
            ig(r, c) = gt(r, c) ? 0 : 1;
        }
    }
    return iou(count(ip, ig));
}

inline double ber(const Counts& k) {
    const double p = static_cast<double>(k.tp + k.fn);
    const double n = static_cast<double>(k.tn + k.fp);
    if (p == 0) return 100.0 * (1.0 - k.tn / n);
    if (n == 0) return 100.0 * (1.0 - k.tp / p);
    return 100.0 * (1.0 - 0.5 * (k.tp / p + k.tn / n));
}

inline double max_f(const cv::Mat1f& prob, const cv::Mat1b& gt, double beta2) {
    double best = 0.0;
    for (int k = 0; k <= 254; ++k) {
        const auto c = count(threshold(prob, k / 255.0), gt);
        const double precision = c.tp + c.fp ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
        const double recall = c.tp + c.fn ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
        const double denom = beta2 * precision + recall;
        const double f = denom > 0.0 ? (1.0 + beta2) * precision * recall / denom : 0.0;
        if (f > best) best = f;
    }
    return best;
}

inline double fpr(const std::vector<cv::Mat1f>& preds, double min_area) {
    int flagged = 0;
    for (const auto& p : preds) {
        int on = 0;
        for (int r = 0; r < p.rows; ++r) {
            for (int c = 0; c < p.cols; ++c) on += p(r, c) > 0.5f ? 1 : 0;
        }
        if (static_cast<double>(on) / static_cast<double>(p.total()) > min_area) ++flagged;
    }
    return static_cast<double>(flagged) / static_cast<double>(preds.size());
}

/// 8-connected flood fill.
inline int components(const cv::Mat1b& mask) {
    cv::Mat1b seen = cv::Mat1b::zeros(mask.size());
    int n = 0;
    for (int r = 0; r < mask.rows; ++r) {
        for (int c = 0; c < mask.cols; ++c) {
            if (!mask(r, c) || seen(r, c)) continue;
            ++n;
            std::queue<cv::Point> q;
            q.push({c, r});
            seen(r, c) = 1;
            while (!q.empty()) {
                const auto p = q.front();
                q.pop();
                for (int dr = -1; dr <= 1; ++dr) {
                    for (int dc = -1; dc <= 1; ++dc) {
                        const int rr = p.y + dr, cc = p.x + dc;
                        if (rr < 0 || rr >= mask.rows || cc < 0 || cc >= mask.cols) continue;
                        if (mask(rr, cc) && !seen(rr, cc)) {
                            seen(rr, cc) = 1;
                            q.push({cc, rr});
                        }
                    }
                }
            }
        }
    }
    return n;
}

inline cv::Mat1b random_mask(std::mt19937_64& rng, int rows, int cols, double p_on) {
    std::bernoulli_distribution on(p_on);
    cv::Mat1b m(rows, cols);
    for (auto& v : m) v = on(rng) ? 1 : 0;
    return m;
}

/// Probabilities on the k/255 grid and off it, including exact 0.5 and the extremes.
inline cv::Mat1f random_prob(std::mt19937_64& rng, int rows, int cols) {
    std::uniform_real_distribution<float> u(0.0f, 1.0f);
    std::uniform_int_distribution<int> grid(0, 255);
    std::uniform_int_distribution<int> kind(0, 9);
    cv::Mat1f m(rows, cols);
    for (auto& v : m) {
        switch (kind(rng)) {
            case 0: v = static_cast<float>(grid(rng) / 255.0); break;
            case 1: v = 0.5f; break;
            case 2: v = 0.0f; break;
            case 3: v = 1.0f; break;
            default: v = u(rng); break;
        }
    }
    return m;
}

}  // namespace oracle
