#pragma once

#include <cstdint>

#include <torch/torch.h>

namespace glasseg::nnet {

/// Convolution (no bias) + batch norm + ReLU, "same" padding.
class ConvBnReluImpl : public torch::nn::Module {
public:
    ConvBnReluImpl(std::int64_t in_channels, std::int64_t out_channels, std::int64_t kernel, std::int64_t stride = 1);
    torch::Tensor forward(const torch::Tensor& x);

private:
    torch::nn::Conv2d conv{nullptr};
    torch::nn::BatchNorm2d bn{nullptr};
};
TORCH_MODULE(ConvBnRelu);

/// 2-D sinusoidal encoding of shape (C, H, W). Channels [0, C/2) encode the row and
/// [C/2, C) the column; inside each half, even channels carry sin and odd channels cos of
/// position / 10000^(2k / (C/2)). Requires C divisible by 4.
torch::Tensor positional_encoding(std::int64_t height, std::int64_t width, std::int64_t channels,
                                  const torch::TensorOptions& options = {});

/// (B, C, H, W) -> (B, H*W, C), row-major over H then W.
torch::Tensor to_tokens(const torch::Tensor& spatial);
/// Inverse of to_tokens.
torch::Tensor to_spatial(const torch::Tensor& tokens, std::int64_t height, std::int64_t width);

struct TransformerOptions {
    std::int64_t dim = 256;
    std::int64_t heads = 8;
    std::int64_t ffn_dim = 2048;
    double dropout = 0.1;
};

struct AttentionOutput {
    torch::Tensor output;   // (B, N, C)
    torch::Tensor weights;  // (B, heads, N, N), rows sum to 1
};

/// Post-norm encoder layer: x = LN(x + MHSA(x)); x = LN(x + FFN(x)). No positional terms
/// are added inside, so the layer is equivariant to token permutations.
class TransformerLayerImpl : public torch::nn::Module {
public:
    explicit TransformerLayerImpl(const TransformerOptions& options);

    torch::Tensor forward(const torch::Tensor& tokens);
    AttentionOutput forward_with_attention(const torch::Tensor& tokens);

    [[nodiscard]] const TransformerOptions& options() const { return options_; }

private:
    TransformerOptions options_;
    torch::nn::Linear q_proj{nullptr}, k_proj{nullptr}, v_proj{nullptr}, out_proj{nullptr};
    torch::nn::Linear ffn_in{nullptr}, ffn_out{nullptr};
    torch::nn::LayerNorm norm_attn{nullptr}, norm_ffn{nullptr};
    torch::nn::Dropout dropout{nullptr};
};
TORCH_MODULE(TransformerLayer);

/// Bilinear 2x upsampling (align_corners = false).
torch::Tensor upsample2x(const torch::Tensor& x);
/// Bilinear resize to an explicit spatial size.
torch::Tensor resize_bilinear(const torch::Tensor& x, std::int64_t height, std::int64_t width);

}  // namespace glasseg::nnet
