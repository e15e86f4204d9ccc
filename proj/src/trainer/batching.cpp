#include "glasseg/trainer/batching.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <random>

#include "glasseg/core/errors.hpp"

namespace glasseg::trainer {

namespace {

std::uint64_t mix(std::uint64_t x) {
    // splitmix64 finalizer
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace

torch::Tensor rgb_to_tensor(const cv::Mat3f& rgb) {
    const cv::Mat3f src = rgb.isContinuous() ? rgb : rgb.clone();
    return torch::from_blob(const_cast<float*>(src.ptr<float>()), {src.rows, src.cols, 3}, torch::kFloat)
        .permute({2, 0, 1})
        .unsqueeze(0)
        .clone();
}

torch::Tensor gray_to_tensor(const cv::Mat1f& gray) {
    const cv::Mat1f src = gray.isContinuous() ? gray : gray.clone();
    return torch::from_blob(const_cast<float*>(src.ptr<float>()), {1, 1, src.rows, src.cols}, torch::kFloat).clone();
}

torch::Tensor mask_to_tensor(const BinaryMask& mask) {
    cv::Mat1f f;
    mask.convertTo(f, CV_32F);
    return gray_to_tensor(f);
}

ProbabilityMap tensor_to_map(const torch::Tensor& t) {
    auto m = t.detach().to(torch::kCPU, torch::kFloat).contiguous();
    while (m.dim() > 2) m = m.squeeze(0);
    if (m.dim() != 2) throw InputError("tensor_to_map: expected a single-channel map");
    ProbabilityMap out(static_cast<int>(m.size(0)), static_cast<int>(m.size(1)));
    std::memcpy(out.ptr<float>(), m.data_ptr<float>(), sizeof(float) * m.numel());
    return out;
}

Batch collate(std::span<const datakit::RgbtSample> samples, std::vector<std::size_t> indices) {
    if (samples.empty()) throw InputError("collate: empty batch");
    std::vector<torch::Tensor> rgb, thermal, mask;
    const auto size = samples.front().size();
    for (const auto& s : samples) {
        if (s.size() != size) throw InputError("collate: samples in a batch must share one size");
        if (!s.mask) throw InputError("collate: training samples need a mask (" + s.meta.source + ")");
        rgb.push_back(rgb_to_tensor(s.rgb));
        thermal.push_back(gray_to_tensor(s.thermal));
        mask.push_back(mask_to_tensor(*s.mask));
    }
    return Batch{torch::cat(rgb), torch::cat(thermal), torch::cat(mask), std::move(indices)};
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(mix(seed ^ mix(static_cast<std::uint64_t>(epoch) + 1)));
    // Fisher-Yates with explicit draws; std::shuffle's draw pattern is implementation-defined.
    for (std::size_t i = n; i > 1; --i) {
        const auto j = static_cast<std::size_t>(rng() % i);
        std::swap(order[i - 1], order[j]);
    }
    return order;
}

std::uint64_t sample_seed(std::uint64_t seed, int epoch, std::size_t index) {
    return mix(mix(seed ^ mix(static_cast<std::uint64_t>(epoch) + 1)) + index);
}

}  // namespace glasseg::trainer
