#pragma once

#include <array>
#include <filesystem>

#include <torch/torch.h>

#include "glasseg/nnet/config.hpp"

namespace glasseg::nnet {

/// Outputs of the four encoder stages, shallow to deep.
struct EncoderFeatures {
    std::array<torch::Tensor, 4> stages;
};

/// Four-stage convolutional encoder. ResNet variants follow the torchvision layout
/// (stem conv/bn, stage1..4 == layer1..4, strides 4/8/16/32). The tiny-test encoder has no
/// stem and four (conv-bn-relu x2, first conv stride 2) stages of width 16/32/64/128.
class BackboneImpl : public torch::nn::Module {
public:
    explicit BackboneImpl(BackboneKind kind);

    EncoderFeatures forward(const torch::Tensor& image);

    [[nodiscard]] const std::array<std::int64_t, 4>& stage_channels() const { return stage_channels_; }
    [[nodiscard]] BackboneKind kind() const { return kind_; }

    /// Copies weights from a libtorch archive. Keys may use this module's names or the
    /// torchvision names (conv1/bn1/layerN). Every parameter and buffer must be present.
    void load_weights(const std::filesystem::path& archive);

private:
    BackboneKind kind_;
    std::array<std::int64_t, 4> stage_channels_{};
    torch::nn::Conv2d stem_conv{nullptr};
    torch::nn::BatchNorm2d stem_bn{nullptr};
    std::array<torch::nn::Sequential, 4> stages_{nullptr, nullptr, nullptr, nullptr};
};
TORCH_MODULE(Backbone);

/// Pretrained archive looked up under $GLASSEG_CACHE as `<backbone name>.pt`.
std::filesystem::path pretrained_weights_path(BackboneKind kind);

}  // namespace glasseg::nnet
