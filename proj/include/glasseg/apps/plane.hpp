#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <opencv2/core.hpp>

#include "glasseg/core/image_types.hpp"

namespace glasseg::apps {

struct CameraIntrinsics {
    double fx = 0.0;
    double fy = 0.0;
    double cx = 0.0;
    double cy = 0.0;

    /// Throws InputError unless fx, fy > 0.
    void validate() const;
    /// K^-1 (u, v, 1).
    [[nodiscard]] Eigen::Vector3d ray(double u, double v) const;
};

/// Plane n . X = d with |n| = 1 and d >= 0 (normal oriented away from the camera).
struct GlassPlane {
    Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();
    double offset = 0.0;
    int inlier_count = 0;
    double residual_rms = 0.0;  // meters, over inliers

    /// Depth (z) of the plane along the ray through pixel (u, v); NaN when the ray is parallel.
    [[nodiscard]] double depth_at(const CameraIntrinsics& k, double u, double v) const;
};

struct PlaneFitOptions {
    double trim_sigmas = 2.0;
    int trim_rounds = 3;
};

/// Pixels outside the mask that touch a mask pixel in the 8-neighbourhood, row-major order.
std::vector<cv::Point> boundary_pixels(const BinaryMask& mask);

/// Least-squares plane through 3-D points with iterative trimming: after each fit, points
/// farther than trim_sigmas robust standard deviations are dropped, for trim_rounds rounds.
/// The first fit runs on the consensus set of a least-median-of-squares search over 3-point
/// planes (fixed seed), so gross outliers do not drag the starting plane.
/// The result does not depend on point order. Throws InputError for fewer than 3 points or a
/// rank-deficient (collinear) set.
GlassPlane fit_plane(std::vector<Eigen::Vector3d> points, const PlaneFitOptions& options = {});

/// Back-projects the valid (depth > 0) exterior boundary pixels of `mask` and fits a plane.
GlassPlane fit_glass_plane(const cv::Mat1f& depth, const BinaryMask& mask, const CameraIntrinsics& intrinsics,
                           const PlaneFitOptions& options = {});

struct ComponentFit {
    int label = 0;          // 1-based component label
    int pixel_count = 0;
    bool corrected = false;
    std::optional<GlassPlane> plane;
    std::string error;      // why the fit failed, when it did
};

struct DepthCorrection {
    cv::Mat1f depth;
    std::vector<ComponentFit> components;
};

/// Fits one plane per 8-connected glass component and replaces the depth of its pixels by the
/// plane depth along each pixel's ray. Pixels outside the mask are untouched; components whose
/// fit fails keep their depths and are reported.
DepthCorrection correct_depth(const cv::Mat1f& depth, const BinaryMask& mask, const CameraIntrinsics& intrinsics,
                              const PlaneFitOptions& options = {});

}  // namespace glasseg::apps
