#include "glasseg/nnet/layers.hpp"

#include <cmath>

#include "glasseg/core/errors.hpp"

namespace glasseg::nnet {

namespace F = torch::nn::functional;

ConvBnReluImpl::ConvBnReluImpl(std::int64_t in_channels, std::int64_t out_channels, std::int64_t kernel,
                               std::int64_t stride) {
    conv = register_module("conv", torch::nn::Conv2d(torch::nn::Conv2dOptions(in_channels, out_channels, kernel)
                                                         .stride(stride)
                                                         .padding(kernel / 2)
                                                         .bias(false)));
    bn = register_module("bn", torch::nn::BatchNorm2d(out_channels));
}

torch::Tensor ConvBnReluImpl::forward(const torch::Tensor& x) { return torch::relu(bn(conv(x))); }

torch::Tensor positional_encoding(std::int64_t height, std::int64_t width, std::int64_t channels,
                                  const torch::TensorOptions& options) {
    if (channels <= 0 || channels % 4 != 0) {
        throw InputError("positional_encoding: channel count must be a positive multiple of 4");
    }
    const auto dbl = torch::TensorOptions().dtype(torch::kDouble);
    const std::int64_t half = channels / 2;

    // Frequencies shared by the sin/cos pair (2k, 2k+1).
    auto index = torch::arange(half, dbl);
    auto freq = torch::pow(10000.0, -2.0 * torch::floor(index / 2.0) / static_cast<double>(half));
    auto is_sin = (torch::remainder(index, 2) == 0).view({half, 1, 1});

    auto rows = torch::arange(height, dbl).view({1, height, 1});
    auto cols = torch::arange(width, dbl).view({1, 1, width});
    auto arg_y = rows * freq.view({half, 1, 1});
    auto arg_x = cols * freq.view({half, 1, 1});

    auto enc_y = torch::where(is_sin, torch::sin(arg_y), torch::cos(arg_y)).expand({half, height, width});
    auto enc_x = torch::where(is_sin, torch::sin(arg_x), torch::cos(arg_x)).expand({half, height, width});
    return torch::cat({enc_y, enc_x}, 0).to(options).contiguous();
}

torch::Tensor to_tokens(const torch::Tensor& spatial) {
    if (spatial.dim() != 4) throw InputError("to_tokens: expected (B, C, H, W)");
    return spatial.flatten(2).transpose(1, 2).contiguous();
}

torch::Tensor to_spatial(const torch::Tensor& tokens, std::int64_t height, std::int64_t width) {
    if (tokens.dim() != 3 || tokens.size(1) != height * width) {
        throw InputError("to_spatial: token count does not match H*W");
    }
    return tokens.transpose(1, 2).reshape({tokens.size(0), tokens.size(2), height, width}).contiguous();
}

TransformerLayerImpl::TransformerLayerImpl(const TransformerOptions& options) : options_(options) {
    if (options.dim % options.heads != 0) throw InputError("transformer: dim must be divisible by heads");
    const auto c = options.dim;
    q_proj = register_module("q_proj", torch::nn::Linear(c, c));
    k_proj = register_module("k_proj", torch::nn::Linear(c, c));
    v_proj = register_module("v_proj", torch::nn::Linear(c, c));
    out_proj = register_module("out_proj", torch::nn::Linear(c, c));
    ffn_in = register_module("ffn_in", torch::nn::Linear(c, options.ffn_dim));
    ffn_out = register_module("ffn_out", torch::nn::Linear(options.ffn_dim, c));
    norm_attn = register_module("norm_attn", torch::nn::LayerNorm(torch::nn::LayerNormOptions({c})));
    norm_ffn = register_module("norm_ffn", torch::nn::LayerNorm(torch::nn::LayerNormOptions({c})));
    dropout = register_module("dropout", torch::nn::Dropout(options.dropout));
}

AttentionOutput TransformerLayerImpl::forward_with_attention(const torch::Tensor& x) {
    if (x.dim() != 3 || x.size(2) != options_.dim) {
        throw InputError("transformer: expected tokens (B, N, " + std::to_string(options_.dim) + ")");
    }
    const auto b = x.size(0);
    const auto n = x.size(1);
    const auto h = options_.heads;
    const auto d = options_.dim / h;

    auto split = [&](const torch::Tensor& t) { return t.view({b, n, h, d}).transpose(1, 2); };
    auto q = split(q_proj(x));
    auto k = split(k_proj(x));
    auto v = split(v_proj(x));

    auto scores = torch::matmul(q, k.transpose(-2, -1)) / std::sqrt(static_cast<double>(d));
    auto weights = torch::softmax(scores, -1);
    auto context = torch::matmul(dropout(weights), v).transpose(1, 2).reshape({b, n, options_.dim});

    auto y = norm_attn(x + dropout(out_proj(context)));
    auto ffn = ffn_out(dropout(torch::relu(ffn_in(y))));
    return {norm_ffn(y + dropout(ffn)), weights};
}

torch::Tensor TransformerLayerImpl::forward(const torch::Tensor& tokens) {
    return forward_with_attention(tokens).output;
}

torch::Tensor upsample2x(const torch::Tensor& x) {
    return F::interpolate(x, F::InterpolateFuncOptions()
                                 .scale_factor(std::vector<double>{2.0, 2.0})
                                 .mode(torch::kBilinear)
                                 .align_corners(false));
}

torch::Tensor resize_bilinear(const torch::Tensor& x, std::int64_t height, std::int64_t width) {
    if (x.size(-2) == height && x.size(-1) == width) return x;
    return F::interpolate(x, F::InterpolateFuncOptions()
                                 .size(std::vector<std::int64_t>{height, width})
                                 .mode(torch::kBilinear)
                                 .align_corners(false));
}

}  // namespace glasseg::nnet
