#include "glasseg/apps/plane.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Geometry>
#include <Eigen/SVD>
#include <opencv2/imgproc.hpp>

#include "glasseg/core/errors.hpp"

namespace glasseg::apps {

void CameraIntrinsics::validate() const {
    if (!(fx > 0.0) || !(fy > 0.0)) throw InputError("camera intrinsics: fx and fy must be positive");
}

Eigen::Vector3d CameraIntrinsics::ray(double u, double v) const { return {(u - cx) / fx, (v - cy) / fy, 1.0}; }

double GlassPlane::depth_at(const CameraIntrinsics& k, double u, double v) const {
    const double denom = normal.dot(k.ray(u, v));
    if (std::abs(denom) < 1e-12) return std::numeric_limits<double>::quiet_NaN();
    return offset / denom;
}

std::vector<cv::Point> boundary_pixels(const BinaryMask& mask) {
    require_binary(mask, "boundary_pixels");
    std::vector<cv::Point> out;
    for (int r = 0; r < mask.rows; ++r) {
        for (int c = 0; c < mask.cols; ++c) {
            if (mask(r, c)) continue;
            bool touches = false;
            for (int dr = -1; dr <= 1 && !touches; ++dr) {
                for (int dc = -1; dc <= 1 && !touches; ++dc) {
                    const int rr = r + dr, cc = c + dc;
                    touches = rr >= 0 && rr < mask.rows && cc >= 0 && cc < mask.cols && mask(rr, cc);
                }
            }
            if (touches) out.emplace_back(c, r);
        }
    }
    return out;
}

namespace {

// Plain least-squares plane (total least squares through the centroid).
GlassPlane fit_once(const std::vector<Eigen::Vector3d>& pts) {
    if (pts.size() < 3) throw InputError("plane fit: need at least 3 points, got " + std::to_string(pts.size()));
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (const auto& p : pts) centroid += p;
    centroid /= static_cast<double>(pts.size());
    Eigen::MatrixX3d centered(pts.size(), 3);
    for (std::size_t i = 0; i < pts.size(); ++i) centered.row(static_cast<Eigen::Index>(i)) = (pts[i] - centroid).transpose();

    const Eigen::JacobiSVD<Eigen::MatrixX3d> svd(centered, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    if (s(1) <= 1e-9 * std::max(1.0, s(0))) throw InputError("plane fit: points are collinear");

    GlassPlane plane;
    plane.normal = svd.matrixV().col(2).normalized();
    plane.offset = plane.normal.dot(centroid);
    if (plane.offset < 0.0) {
        plane.normal = -plane.normal;
        plane.offset = -plane.offset;
    }
    plane.inlier_count = static_cast<int>(pts.size());
    double ss = 0.0;
    for (const auto& p : pts) ss += std::pow(plane.normal.dot(p) - plane.offset, 2);
    plane.residual_rms = std::sqrt(ss / static_cast<double>(pts.size()));
    return plane;
}

double median(std::vector<double> v) {
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    double m = *mid;
    if (v.size() % 2 == 0) m = 0.5 * (m + *std::max_element(v.begin(), mid));
    return m;
}

std::vector<double> abs_residuals(const std::vector<Eigen::Vector3d>& pts, const Eigen::Vector3d& n, double d) {
    std::vector<double> r;
    r.reserve(pts.size());
    for (const auto& p : pts) r.push_back(std::abs(n.dot(p) - d));
    return r;
}

// Least median of squares over random 3-point planes. Returns the points within
// trim_sigmas robust deviations of the best candidate, or all points when no
// non-degenerate triple is found.
std::vector<Eigen::Vector3d> lmeds_inliers(const std::vector<Eigen::Vector3d>& pts, double trim_sigmas) {
    constexpr int kTrials = 200;
    std::mt19937_64 rng(0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
    double best_median = std::numeric_limits<double>::infinity();
    std::vector<double> best_residuals;
    for (int t = 0; t < kTrials; ++t) {
        const std::size_t i = pick(rng), j = pick(rng), k = pick(rng);
        if (i == j || j == k || i == k) continue;
        const Eigen::Vector3d n = (pts[j] - pts[i]).cross(pts[k] - pts[i]);
        const double len = n.norm();
        if (len <= 1e-12 * std::max(1.0, (pts[j] - pts[i]).squaredNorm())) continue;
        auto r = abs_residuals(pts, n / len, n.dot(pts[i]) / len);
        const double m = median(r);
        if (m < best_median) {
            best_median = m;
            best_residuals = std::move(r);
        }
    }
    if (best_residuals.empty()) return pts;
    // Small-sample correction from Rousseeuw and Leroy.
    const double n = static_cast<double>(pts.size());
    const double sigma = 1.4826 * (1.0 + 5.0 / std::max(1.0, n - 3.0)) * best_median;
    const double cutoff = std::max(trim_sigmas * sigma, best_median);
    std::vector<Eigen::Vector3d> kept;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        if (best_residuals[i] <= cutoff) kept.push_back(pts[i]);
    }
    return kept.size() >= 3 ? kept : pts;
}

}  // namespace

GlassPlane fit_plane(std::vector<Eigen::Vector3d> points, const PlaneFitOptions& options) {
    // Canonical order makes floating-point summation independent of the caller's order.
    std::sort(points.begin(), points.end(), [](const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
        return std::lexicographical_compare(a.data(), a.data() + 3, b.data(), b.data() + 3);
    });
    // Rank check on the full set, so a collinear input is reported as such.
    GlassPlane plane = fit_once(points);
    if (points.size() > 3) {
        auto seed = lmeds_inliers(points, options.trim_sigmas);
        if (seed.size() < points.size()) {
            try {
                plane = fit_once(seed);
                points = std::move(seed);
            } catch (const InputError&) {
                // Degenerate consensus set; fall back to trimming from the full fit.
            }
        }
    }
    for (int round = 0; round < options.trim_rounds; ++round) {
        const auto residuals = abs_residuals(points, plane.normal, plane.offset);
        // Robust sigma from the median absolute residual (normal consistency factor 1.4826).
        const double sigma = 1.4826 * median(residuals);
        if (sigma <= 0.0) break;
        std::vector<Eigen::Vector3d> kept;
        for (std::size_t i = 0; i < points.size(); ++i) {
            if (residuals[i] <= options.trim_sigmas * sigma) kept.push_back(points[i]);
        }
        if (kept.size() == points.size() || kept.size() < 3) break;
        points = std::move(kept);
        plane = fit_once(points);
    }
    return plane;
}

GlassPlane fit_glass_plane(const cv::Mat1f& depth, const BinaryMask& mask, const CameraIntrinsics& intrinsics,
                           const PlaneFitOptions& options) {
    intrinsics.validate();
    require_same_size(depth, mask, "fit_glass_plane");
    std::vector<Eigen::Vector3d> points;
    for (const auto& px : boundary_pixels(mask)) {
        const double z = depth(px.y, px.x);
        if (z > 0.0 && std::isfinite(z)) points.push_back(z * intrinsics.ray(px.x, px.y));
    }
    if (points.size() < 3) {
        throw InputError("fit_glass_plane: " + std::to_string(points.size()) + " valid boundary depths, need 3");
    }
    return fit_plane(std::move(points), options);
}

DepthCorrection correct_depth(const cv::Mat1f& depth, const BinaryMask& mask, const CameraIntrinsics& intrinsics,
                              const PlaneFitOptions& options) {
    intrinsics.validate();
    require_same_size(depth, mask, "correct_depth");
    require_binary(mask, "correct_depth");
    DepthCorrection out{depth.clone(), {}};
    cv::Mat1i labels;
    const int n = cv::connectedComponents(mask, labels, 8, CV_32S);
    for (int label = 1; label < n; ++label) {
        const BinaryMask component = labels == label;
        BinaryMask component01;
        component.convertTo(component01, CV_8U, 1.0 / 255.0);
        ComponentFit fit;
        fit.label = label;
        fit.pixel_count = cv::countNonZero(component01);
        try {
            const auto plane = fit_glass_plane(depth, component01, intrinsics, options);
            fit.plane = plane;
            for (int r = 0; r < depth.rows; ++r) {
                for (int c = 0; c < depth.cols; ++c) {
                    if (labels(r, c) != label) continue;
                    const double z = plane.depth_at(intrinsics, c, r);
                    if (std::isfinite(z) && z > 0.0) out.depth(r, c) = static_cast<float>(z);
                }
            }
            fit.corrected = true;
        } catch (const InputError& e) {
            fit.error = e.what();
        }
        out.components.push_back(std::move(fit));
    }
    return out;
}

}  // namespace glasseg::apps
