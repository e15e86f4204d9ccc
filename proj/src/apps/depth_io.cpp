#include "glasseg/apps/depth_io.hpp"

#include <cmath>
#include <fstream>

#include <opencv2/imgcodecs.hpp>

#include "glasseg/core/errors.hpp"

namespace glasseg::apps {

namespace {

std::string lower_extension(const std::filesystem::path& path) {
    auto ext = path.extension().string();
    for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return ext;
}

}  // namespace

cv::Mat1f load_depth(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw InputError("depth file not found: " + path.string());
    const cv::Mat raw = cv::imread(path.string(), cv::IMREAD_ANYDEPTH | cv::IMREAD_GRAYSCALE);
    if (raw.empty()) throw InputError("cannot decode depth image " + path.string());
    cv::Mat1f out;
    switch (raw.depth()) {
        case CV_16U:
            raw.convertTo(out, CV_32F, 1e-3);
            break;
        case CV_32F:
            out = raw;
            break;
        default:
            throw InputError("depth image " + path.string() + " must be 16-bit PNG or float TIFF");
    }
    for (auto& v : out) {
        if (!std::isfinite(v) || v < 0.0f) v = 0.0f;
    }
    return out;
}

void save_depth(const cv::Mat1f& depth, const std::filesystem::path& path) {
    const auto ext = lower_extension(path);
    bool ok = false;
    if (ext == ".png") {
        cv::Mat1w mm;
        depth.convertTo(mm, CV_16U, 1000.0);  // saturating, rounds to nearest
        ok = cv::imwrite(path.string(), mm);
    } else if (ext == ".tif" || ext == ".tiff") {
        ok = cv::imwrite(path.string(), depth);
    } else {
        throw InputError("depth output must be .png or .tiff: " + path.string());
    }
    if (!ok) throw std::runtime_error("failed to write " + path.string());
}

void export_ply(const cv::Mat1f& depth, const CameraIntrinsics& intrinsics, const std::filesystem::path& path) {
    intrinsics.validate();
    std::vector<Eigen::Vector3d> points;
    for (int r = 0; r < depth.rows; ++r) {
        for (int c = 0; c < depth.cols; ++c) {
            const double z = depth(r, c);
            if (z > 0.0) points.push_back(z * intrinsics.ray(c, r));
        }
    }
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open " + path.string());
    out << "ply\nformat ascii 1.0\nelement vertex " << points.size()
        << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
    for (const auto& p : points) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
}

}  // namespace glasseg::apps
