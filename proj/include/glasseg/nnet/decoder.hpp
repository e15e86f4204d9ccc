#pragma once

#include <array>
#include <optional>

#include <torch/torch.h>

#include "glasseg/nnet/config.hpp"
#include "glasseg/nnet/layers.hpp"

namespace glasseg::nnet {

/// conv3x3-bn-relu, conv3x3-bn-relu, conv1x1, sigmoid over concat(e, d): one weight per pixel.
class SpatialAttentionImpl : public torch::nn::Module {
public:
    explicit SpatialAttentionImpl(std::int64_t width);
    torch::Tensor forward(const torch::Tensor& skip, const torch::Tensor& d);

private:
    ConvBnRelu conv1{nullptr}, conv2{nullptr};
    torch::nn::Conv2d conv3{nullptr};
};
TORCH_MODULE(SpatialAttention);

/// Intermediate values of one decoder block, kept for inspection.
struct DecoderTrace {
    torch::Tensor w_r;       // (B,1,H,W) or undefined
    torch::Tensor w_t;       // (B,1,H,W) or undefined
    torch::Tensor combined;  // d' before the output convolution
};

struct DecoderBlockOptions {
    std::int64_t width = 256;        // channel count of d and of the projected skips
    std::int64_t out_width = 128;    // channel count after the output convolution
    std::int64_t rgb_skip = 0;       // raw channel count of the RGB skip, 0 when absent
    std::int64_t thermal_skip = 0;   // raw channel count of the thermal skip, 0 when absent
    DecoderKind kind = DecoderKind::kWeighted;
};

/// d' = w_r * e_r + w_t * e_t + d (weighted), e_r + e_t + d (DS) or a 1x1 conv over the
/// concatenation (DC); then conv3x3-bn-relu and bilinear 2x upsampling. A missing stream
/// drops its term.
class DecoderBlockImpl : public torch::nn::Module {
public:
    explicit DecoderBlockImpl(const DecoderBlockOptions& options);

    /// Raw encoder features in, upsampled block output out.
    torch::Tensor forward(const torch::Tensor& skip_r, const torch::Tensor& skip_t, const torch::Tensor& d,
                          DecoderTrace* trace = nullptr);

    /// Combination step on already projected skips (same shape as d).
    torch::Tensor combine(const torch::Tensor& e_r, const torch::Tensor& e_t, const torch::Tensor& d,
                          DecoderTrace* trace = nullptr);

    /// Replaces every attention weight by a constant. Diagnostic hook.
    void set_weight_override(std::optional<double> value) { weight_override_ = value; }

    [[nodiscard]] const DecoderBlockOptions& options() const { return options_; }

private:
    torch::Tensor weight(SpatialAttention& attention, const torch::Tensor& e, const torch::Tensor& d) const;

    DecoderBlockOptions options_;
    std::optional<double> weight_override_;
    ConvBnRelu lateral_r{nullptr}, lateral_t{nullptr};
    SpatialAttention att_r{nullptr}, att_t{nullptr};
    ConvBnRelu merge{nullptr};
    ConvBnRelu out_conv{nullptr};
};
TORCH_MODULE(DecoderBlock);

/// Four decoder blocks (block1..block4). Block k consumes encoder stage 5-k.
class DecoderImpl : public torch::nn::Module {
public:
    DecoderImpl(const ModelConfig& config, const std::array<std::int64_t, 4>& rgb_stages,
                const std::array<std::int64_t, 4>& thermal_stages);

    /// `skips_r` / `skips_t` hold the four encoder stages (shallow first); either may be empty.
    torch::Tensor forward(const std::array<torch::Tensor, 4>& skips_r, const std::array<torch::Tensor, 4>& skips_t,
                          const torch::Tensor& bridge, std::array<DecoderTrace, 4>* traces = nullptr);

    void set_weight_override(std::optional<double> value);
    [[nodiscard]] const std::array<DecoderBlock, 4>& blocks() const { return blocks_; }
    [[nodiscard]] std::int64_t out_channels() const { return out_channels_; }

private:
    std::array<DecoderBlock, 4> blocks_{nullptr, nullptr, nullptr, nullptr};
    std::int64_t out_channels_ = 0;
};
TORCH_MODULE(Decoder);

}  // namespace glasseg::nnet
