#include "glasseg/trainer/evaluate.hpp"

#include <algorithm>
#include <cmath>

#include <opencv2/imgproc.hpp>

#include "glasseg/core/errors.hpp"
#include "glasseg/nnet/checkpoint.hpp"
#include "glasseg/trainer/batching.hpp"

namespace glasseg::trainer {

namespace {

template <typename Mat>
Mat resized(const Mat& src, cv::Size size) {
    if (src.size() == size) return src;
    Mat out;
    cv::resize(src, out, size, 0, 0, cv::INTER_LINEAR);
    return out;
}

bool needs_rgb(nnet::InputKind kind) {
    return kind == nnet::InputKind::kRgbt || kind == nnet::InputKind::kRgbOnly || kind == nnet::InputKind::kDualRgb;
}

bool needs_thermal(nnet::InputKind kind) {
    return kind == nnet::InputKind::kRgbt || kind == nnet::InputKind::kThermalOnly ||
           kind == nnet::InputKind::kDualThermal;
}

}  // namespace

int network_dimension(int pixels) { return std::max(32, static_cast<int>(std::lround(pixels / 32.0)) * 32); }

ProbabilityMap predict(nnet::GlassSegNet& model, const datakit::RgbtSample& sample, const torch::Device& device) {
    const auto kind = model->config().input;
    const bool use_rgb = needs_rgb(kind);
    const bool use_thermal = needs_thermal(kind);
    if (use_rgb && sample.rgb.empty()) {
        throw InputError(std::string("a ") + std::string(nnet::to_string(kind)) + " model requires an RGB image");
    }
    if (use_thermal && sample.thermal.empty()) {
        throw InputError(std::string("a ") + std::string(nnet::to_string(kind)) + " model requires a thermal image");
    }
    const cv::Size original = use_rgb ? sample.rgb.size() : sample.thermal.size();
    if (use_rgb && use_thermal) require_same_size(sample.rgb, sample.thermal, "predict");
    const cv::Size net(network_dimension(original.width), network_dimension(original.height));

    torch::Tensor rgb, thermal;
    if (use_rgb) rgb = rgb_to_tensor(resized(sample.rgb, net)).to(device);
    if (use_thermal) thermal = gray_to_tensor(resized(sample.thermal, net)).to(device);

    torch::NoGradGuard guard;
    const auto out = model(nnet::make_input(kind, rgb, thermal));
    ProbabilityMap prob = tensor_to_map(out.probability);
    return resized(prob, original);
}

Predictor model_predictor(nnet::GlassSegNet model, torch::Device device) {
    model->to(device);
    model->eval();
    return [model, device](const datakit::RgbtSample& sample) mutable { return predict(model, sample, device); };
}

metrics::MetricsReport evaluate(const Predictor& predictor, const std::vector<datakit::RgbtSample>& samples,
                                const metrics::EvalOptions& options) {
    if (samples.empty()) throw InputError("evaluate: no samples");
    std::vector<ProbabilityMap> predictions;
    std::vector<BinaryMask> gts;
    predictions.reserve(samples.size());
    gts.reserve(samples.size());
    for (const auto& s : samples) {
        if (!s.mask) throw InputError("evaluate: sample " + s.meta.source + " has no ground-truth mask");
        auto p = predictor(s);
        require_same_size(p, *s.mask, "evaluate: prediction vs mask of " + s.meta.source);
        predictions.push_back(std::move(p));
        gts.push_back(*s.mask);
    }
    return metrics::evaluate_split(predictions, gts, options);
}

metrics::MetricsReport evaluate_checkpoint(const std::filesystem::path& checkpoint,
                                           const std::vector<datakit::RgbtSample>& samples,
                                           const metrics::EvalOptions& options, torch::Device device) {
    return evaluate(model_predictor(nnet::load_model(checkpoint), device), samples, options);
}

}  // namespace glasseg::trainer
