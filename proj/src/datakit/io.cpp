#include "glasseg/datakit/io.hpp"

#include <fstream>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "glasseg/core/errors.hpp"
#include "glasseg/datakit/thermal.hpp"

namespace glasseg::datakit {

namespace {

cv::Mat read_image(const fs::path& path, int flags, const char* what) {
    if (!fs::exists(path)) {
        throw InputError(std::string(what) + " file not found: " + path.string());
    }
    cv::Mat img = cv::imread(path.string(), flags);
    if (img.empty()) throw InputError(std::string("cannot decode ") + what + " image: " + path.string());
    return img;
}

cv::Mat1f read_thermal(const fs::path& path, std::optional<cv::Size> target) {
    cv::Mat img = read_image(path, cv::IMREAD_ANYDEPTH | cv::IMREAD_ANYCOLOR, "thermal");
    if (img.channels() == 3) cv::cvtColor(img, img, cv::COLOR_BGR2GRAY);
    if (img.channels() != 1) throw InputError("thermal image must be single-channel: " + path.string());

    std::string ext = path.extension().string();
    for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    const bool prenormalized = ext == ".png";

    cv::Mat1f values;
    if (prenormalized) {
        const double scale = img.depth() == CV_16U ? 1.0 / 65535.0 : img.depth() == CV_8U ? 1.0 / 255.0 : 1.0;
        img.convertTo(values, CV_32F, scale);
    } else {
        img.convertTo(values, CV_32F);
    }
    if (target && values.size() != *target) {
        cv::Mat1f resized;
        cv::resize(values, resized, *target, 0, 0, cv::INTER_LINEAR);
        values = resized;
    }
    if (prenormalized) {
        cv::min(cv::max(values, 0.0), 1.0, values);
        return values;
    }
    return normalize_thermal(RawThermal{values});
}

fs::path resolve(const fs::path& base, const std::string& field) {
    fs::path p(field);
    return p.is_absolute() ? p : base / p;
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

}  // namespace

BinaryMask load_mask(const fs::path& path) {
    cv::Mat img = read_image(path, cv::IMREAD_GRAYSCALE, "mask");
    BinaryMask mask(img.size());
    for (int r = 0; r < img.rows; ++r) {
        const auto* src = img.ptr<std::uint8_t>(r);
        auto* dst = mask.ptr<std::uint8_t>(r);
        for (int c = 0; c < img.cols; ++c) dst[c] = src[c] >= 128 ? 1 : 0;
    }
    return mask;
}

void save_mask(const BinaryMask& mask, const fs::path& path) {
    cv::Mat1b out = mask * 255;
    if (!cv::imwrite(path.string(), out)) throw InputError("cannot write mask: " + path.string());
}

cv::Mat3f load_rgb(const fs::path& path) {
    cv::Mat bgr = read_image(path, cv::IMREAD_COLOR, "rgb");
    cv::Mat rgb8;
    cv::cvtColor(bgr, rgb8, cv::COLOR_BGR2RGB);
    cv::Mat3f rgb;
    rgb8.convertTo(rgb, CV_32FC3, 1.0 / 255.0);
    return rgb;
}

cv::Mat1f load_thermal(const fs::path& path, std::optional<cv::Size> target) { return read_thermal(path, target); }

RgbtSample load_pair(const fs::path& rgb_path, const fs::path& thermal_path,
                     const std::optional<fs::path>& mask_path) {
    RgbtSample sample;
    sample.rgb = load_rgb(rgb_path);
    sample.thermal = read_thermal(thermal_path, sample.rgb.size());

    if (mask_path) {
        BinaryMask mask = load_mask(*mask_path);
        if (mask.size() != sample.rgb.size()) {
            throw InputError("mask dimensions differ from rgb: " + mask_path->string());
        }
        sample.meta.area_ratio = area_ratio(mask);
        sample.mask = std::move(mask);
    }
    sample.meta.source = rgb_path.stem().string();
    return sample;
}

void save_pair(const RgbtSample& sample, const fs::path& rgb_path, const fs::path& thermal_path,
               const std::optional<fs::path>& mask_path) {
    cv::Mat rgb8;
    sample.rgb.convertTo(rgb8, CV_8UC3, 255.0);
    cv::Mat bgr;
    cv::cvtColor(rgb8, bgr, cv::COLOR_RGB2BGR);
    if (!cv::imwrite(rgb_path.string(), bgr)) throw InputError("cannot write rgb: " + rgb_path.string());

    cv::Mat1f celsius = sample.thermal * 20.0 + 15.0;
    if (!cv::imwrite(thermal_path.string(), celsius)) {
        throw InputError("cannot write thermal: " + thermal_path.string());
    }
    if (mask_path) {
        if (!sample.mask) throw InputError("save_pair: sample has no mask");
        save_mask(*sample.mask, *mask_path);
    }
}

std::vector<ManifestEntry> read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("manifest not found: " + path.string());
    const fs::path base = path.parent_path();

    std::vector<ManifestEntry> entries;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = trim(line);
        if (line.empty() || line.front() == '#') continue;

        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(trim(field));
        if (!line.empty() && line.back() == ',') fields.emplace_back();

        if (entries.empty() && !fields.empty() && fields[0] == "rgb_path") continue;
        if (fields.size() != 5) {
            throw InputError(path.string() + ":" + std::to_string(line_no) +
                             ": expected 5 comma-separated fields, got " + std::to_string(fields.size()));
        }
        ManifestEntry e;
        e.rgb = resolve(base, fields[0]);
        e.thermal = resolve(base, fields[1]);
        if (!fields[2].empty()) e.mask = resolve(base, fields[2]);
        e.scene = fields[3];
        e.split = fields[4];
        entries.push_back(std::move(e));
    }
    return entries;
}

void write_manifest(const fs::path& path, const std::vector<ManifestEntry>& entries) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write manifest: " + path.string());
    const fs::path base = path.parent_path();
    auto rel = [&](const fs::path& p) { return p.lexically_relative(base).generic_string(); };
    out << "rgb_path,thermal_path,mask_path,scene_tag,split\n";
    for (const auto& e : entries) {
        out << rel(e.rgb) << ',' << rel(e.thermal) << ',' << (e.mask ? rel(*e.mask) : std::string{}) << ','
            << e.scene << ',' << e.split << '\n';
    }
}

std::vector<RgbtSample> load_entries(const std::vector<ManifestEntry>& entries) {
    std::vector<RgbtSample> samples;
    samples.reserve(entries.size());
    for (const auto& e : entries) {
        RgbtSample s = load_pair(e.rgb, e.thermal, e.mask);
        s.meta.scene = e.scene;
        samples.push_back(std::move(s));
    }
    return samples;
}

std::vector<RgbtSample> load_split(const fs::path& manifest, const std::string& split) {
    std::vector<ManifestEntry> selected;
    for (auto& e : read_manifest(manifest)) {
        if (e.split == split) selected.push_back(std::move(e));
    }
    return load_entries(selected);
}

void validate(const RgbtSample& sample) {
    if (sample.rgb.empty()) throw InputError("sample has an empty rgb image");
    require_same_size(sample.rgb, sample.thermal, "rgb/thermal");
    double lo = 0.0;
    double hi = 0.0;
    cv::minMaxLoc(sample.thermal, &lo, &hi);
    if (!cv::checkRange(sample.thermal) || lo < 0.0 || hi > 1.0) {
        throw InputError("thermal values must lie in [0,1]");
    }
    if (sample.mask) {
        require_same_size(sample.rgb, *sample.mask, "rgb/mask");
        require_binary(*sample.mask, "sample");
    }
}

double area_ratio(const BinaryMask& mask) {
    if (mask.empty()) return 0.0;
    return static_cast<double>(cv::countNonZero(mask)) / static_cast<double>(mask.total());
}

}  // namespace glasseg::datakit
