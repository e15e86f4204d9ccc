#include "glasseg/nnet/backbone.hpp"

#include <cstdlib>
#include <optional>

#include "glasseg/core/errors.hpp"
#include "glasseg/nnet/layers.hpp"

namespace glasseg::nnet {

namespace {

torch::nn::Conv2d conv(std::int64_t in, std::int64_t out, std::int64_t k, std::int64_t stride = 1) {
    return torch::nn::Conv2d(torch::nn::Conv2dOptions(in, out, k).stride(stride).padding(k / 2).bias(false));
}

torch::nn::Sequential downsample(std::int64_t in, std::int64_t out, std::int64_t stride) {
    return torch::nn::Sequential(conv(in, out, 1, stride), torch::nn::BatchNorm2d(out));
}

class BasicBlockImpl : public torch::nn::Module {
public:
    static constexpr std::int64_t kExpansion = 1;

    BasicBlockImpl(std::int64_t in, std::int64_t planes, std::int64_t stride) {
        conv1 = register_module("conv1", conv(in, planes, 3, stride));
        bn1 = register_module("bn1", torch::nn::BatchNorm2d(planes));
        conv2 = register_module("conv2", conv(planes, planes, 3));
        bn2 = register_module("bn2", torch::nn::BatchNorm2d(planes));
        if (stride != 1 || in != planes) ds = register_module("downsample", downsample(in, planes, stride));
    }

    torch::Tensor forward(const torch::Tensor& x) {
        auto y = torch::relu(bn1(conv1(x)));
        y = bn2(conv2(y));
        return torch::relu(y + (ds ? ds->forward(x) : x));
    }

private:
    torch::nn::Conv2d conv1{nullptr}, conv2{nullptr};
    torch::nn::BatchNorm2d bn1{nullptr}, bn2{nullptr};
    torch::nn::Sequential ds{nullptr};
};
TORCH_MODULE(BasicBlock);

class BottleneckImpl : public torch::nn::Module {
public:
    static constexpr std::int64_t kExpansion = 4;

    BottleneckImpl(std::int64_t in, std::int64_t planes, std::int64_t stride) {
        const auto out = planes * kExpansion;
        conv1 = register_module("conv1", conv(in, planes, 1));
        bn1 = register_module("bn1", torch::nn::BatchNorm2d(planes));
        conv2 = register_module("conv2", conv(planes, planes, 3, stride));
        bn2 = register_module("bn2", torch::nn::BatchNorm2d(planes));
        conv3 = register_module("conv3", conv(planes, out, 1));
        bn3 = register_module("bn3", torch::nn::BatchNorm2d(out));
        if (stride != 1 || in != out) ds = register_module("downsample", downsample(in, out, stride));
    }

    torch::Tensor forward(const torch::Tensor& x) {
        auto y = torch::relu(bn1(conv1(x)));
        y = torch::relu(bn2(conv2(y)));
        y = bn3(conv3(y));
        return torch::relu(y + (ds ? ds->forward(x) : x));
    }

private:
    torch::nn::Conv2d conv1{nullptr}, conv2{nullptr}, conv3{nullptr};
    torch::nn::BatchNorm2d bn1{nullptr}, bn2{nullptr}, bn3{nullptr};
    torch::nn::Sequential ds{nullptr};
};
TORCH_MODULE(Bottleneck);

template <typename Block>
torch::nn::Sequential make_stage(std::int64_t& in, std::int64_t planes, int blocks, std::int64_t stride) {
    torch::nn::Sequential stage;
    for (int i = 0; i < blocks; ++i) {
        stage->push_back(Block(in, planes, i == 0 ? stride : 1));
        in = planes * Block::ContainedType::kExpansion;
    }
    return stage;
}

std::array<int, 4> block_counts(BackboneKind kind) {
    switch (kind) {
        case BackboneKind::kResNet18: return {2, 2, 2, 2};
        case BackboneKind::kResNet34: return {3, 4, 6, 3};
        case BackboneKind::kResNet50: return {3, 4, 6, 3};
        case BackboneKind::kResNet101: return {3, 4, 23, 3};
        case BackboneKind::kTinyTest: break;
    }
    return {0, 0, 0, 0};
}

std::string torchvision_name(const std::string& name) {
    auto replace_prefix = [&](const std::string& from, const std::string& to) -> std::optional<std::string> {
        if (name.rfind(from, 0) == 0) return to + name.substr(from.size());
        return std::nullopt;
    };
    if (auto n = replace_prefix("stem_conv.", "conv1.")) return *n;
    if (auto n = replace_prefix("stem_bn.", "bn1.")) return *n;
    for (int i = 1; i <= 4; ++i) {
        if (auto n = replace_prefix("stage" + std::to_string(i) + ".", "layer" + std::to_string(i) + ".")) return *n;
    }
    return name;
}

}  // namespace

BackboneImpl::BackboneImpl(BackboneKind kind) : kind_(kind) {
    if (kind == BackboneKind::kTinyTest) {
        std::int64_t in = 3;
        const std::array<std::int64_t, 4> widths{16, 32, 64, 128};
        for (int i = 0; i < 4; ++i) {
            stages_[i] = torch::nn::Sequential(ConvBnRelu(in, widths[i], 3, 2), ConvBnRelu(widths[i], widths[i], 3, 1));
            in = widths[i];
        }
        stage_channels_ = widths;
    } else {
        stem_conv = register_module("stem_conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(3, 64, 7).stride(2).padding(3).bias(false)));
        stem_bn = register_module("stem_bn", torch::nn::BatchNorm2d(64));
        const auto counts = block_counts(kind);
        const bool bottleneck = kind == BackboneKind::kResNet50 || kind == BackboneKind::kResNet101;
        std::int64_t in = 64;
        const std::array<std::int64_t, 4> planes{64, 128, 256, 512};
        for (int i = 0; i < 4; ++i) {
            const std::int64_t stride = i == 0 ? 1 : 2;
            stages_[i] = bottleneck ? make_stage<Bottleneck>(in, planes[i], counts[i], stride)
                                    : make_stage<BasicBlock>(in, planes[i], counts[i], stride);
            stage_channels_[i] = in;
        }
    }
    for (int i = 0; i < 4; ++i) register_module("stage" + std::to_string(i + 1), stages_[i]);
}

EncoderFeatures BackboneImpl::forward(const torch::Tensor& image) {
    auto x = image;
    if (stem_conv) {
        x = torch::relu(stem_bn(stem_conv(x)));
        x = torch::max_pool2d(x, 3, 2, 1);
    }
    EncoderFeatures out;
    for (int i = 0; i < 4; ++i) {
        x = stages_[i]->forward(x);
        out.stages[i] = x;
    }
    return out;
}

void BackboneImpl::load_weights(const std::filesystem::path& archive_path) {
    if (!std::filesystem::exists(archive_path)) {
        throw ConfigError("pretrained weights not found: " + archive_path.string());
    }
    torch::serialize::InputArchive archive;
    archive.load_from(archive_path.string());

    torch::NoGradGuard no_grad;
    auto copy_into = [&](const std::string& name, torch::Tensor& target, bool is_buffer) {
        torch::Tensor source;
        if (!archive.try_read(name, source, is_buffer) && !archive.try_read(torchvision_name(name), source, is_buffer)) {
            throw ConfigError("pretrained archive " + archive_path.string() + " lacks '" + name + "'");
        }
        if (source.sizes() != target.sizes()) {
            throw ConfigError("pretrained tensor '" + name + "' has mismatched shape");
        }
        target.copy_(source);
    };
    for (auto& item : named_parameters()) copy_into(item.key(), item.value(), false);
    for (auto& item : named_buffers()) copy_into(item.key(), item.value(), true);
}

std::filesystem::path pretrained_weights_path(BackboneKind kind) {
    const char* cache = std::getenv("GLASSEG_CACHE");
    if (cache == nullptr || *cache == '\0') {
        throw ConfigError("model.pretrained is set but GLASSEG_CACHE is not defined");
    }
    return std::filesystem::path(cache) / (std::string(to_string(kind)) + ".pt");
}

}  // namespace glasseg::nnet
