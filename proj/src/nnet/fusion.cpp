#include "glasseg/nnet/fusion.hpp"

#include "glasseg/core/errors.hpp"

namespace glasseg::nnet {

MfmBlockImpl::MfmBlockImpl(const TransformerOptions& options, FusionKind mode, bool final_iteration)
    : mode_(mode), final_(final_iteration) {
    if (!is_mfm_family(mode)) throw ConfigError("MfmBlock requires an MFM-family fusion kind");
    const auto c = options.dim;
    if (!final_) {
        trans_r = register_module("trans_r", TransformerLayer(options));
        trans_t = register_module("trans_t", TransformerLayer(options));
    }
    trans_rt = register_module("trans_rt", TransformerLayer(options));
    if (mode_ == FusionKind::kMfm) {
        trans_w = register_module("trans_w", TransformerLayer(options));
        linear_w = register_module("linear_w", torch::nn::Linear(c, 1));
    }
    if (mode_ == FusionKind::kMfmDirectConcat) {
        if (!final_) {
            merge_r = register_module("merge_r", torch::nn::Linear(2 * c, c));
            merge_t = register_module("merge_t", torch::nn::Linear(2 * c, c));
        } else {
            merge_fused = register_module("merge_fused", torch::nn::Linear(2 * c, c));
        }
    }
}

FusionState MfmBlockImpl::forward(const torch::Tensor& f_r, const torch::Tensor& f_t) {
    if (f_r.sizes() != f_t.sizes() || f_r.dim() != 3) {
        throw InputError("MFM: RGB and thermal token volumes must share shape (B, HW, C)");
    }
    FusionState state;
    state.f_rt = trans_rt(torch::cat({f_r, f_t}, 1));
    if (mode_ == FusionKind::kMfm) {
        if (weight_override_) {
            state.w = torch::full({state.f_rt.size(0), state.f_rt.size(1), 1}, *weight_override_, state.f_rt.options());
        } else {
            state.w = torch::sigmoid(linear_w(trans_w(state.f_rt)));
        }
    }
    if (final_) return state;

    const auto [part_r, part_t] = split_weighted(state);
    if (mode_ == FusionKind::kMfmDirectConcat) {
        state.f_r = merge_r(torch::cat({trans_r(f_r), part_r}, -1));
        state.f_t = merge_t(torch::cat({trans_t(f_t), part_t}, -1));
    } else {
        state.f_r = trans_r(f_r) + part_r;
        state.f_t = trans_t(f_t) + part_t;
    }
    return state;
}

std::pair<torch::Tensor, torch::Tensor> MfmBlockImpl::split_weighted(const FusionState& state) const {
    const auto n = state.f_rt.size(1) / 2;
    const auto weighted = state.w.defined() ? state.w * state.f_rt : state.f_rt;
    return {weighted.narrow(1, 0, n), weighted.narrow(1, n, n)};
}

torch::Tensor MfmBlockImpl::fuse(const FusionState& state) {
    const auto [part_r, part_t] = split_weighted(state);
    if (mode_ == FusionKind::kMfmDirectConcat) {
        if (!merge_fused) throw InputError("MFM-DC: fuse() is only defined on the final iteration");
        return merge_fused(torch::cat({part_r, part_t}, -1));
    }
    return part_r + part_t;
}

MultiModalFusionImpl::MultiModalFusionImpl(const TransformerOptions& options, FusionKind mode,
                                           std::int64_t iterations) {
    if (iterations < 1) throw ConfigError("MFM needs at least one iteration");
    for (std::int64_t i = 0; i < iterations; ++i) {
        blocks_.push_back(register_module("iter" + std::to_string(i + 1), MfmBlock(options, mode, i + 1 == iterations)));
    }
}

torch::Tensor MultiModalFusionImpl::forward_tokens(const torch::Tensor& f_r, const torch::Tensor& f_t,
                                                   std::vector<FusionState>* trace) {
    torch::Tensor r = f_r;
    torch::Tensor t = f_t;
    FusionState state;
    for (auto& block : blocks_) {
        state = block->forward(r, t);
        if (trace) trace->push_back(state);
        r = state.f_r;
        t = state.f_t;
    }
    return blocks_.back()->fuse(state);
}

torch::Tensor MultiModalFusionImpl::forward(const torch::Tensor& rgb, const torch::Tensor& thermal) {
    if (rgb.sizes() != thermal.sizes()) throw InputError("MFM: RGB and thermal features differ in shape");
    const auto fused = forward_tokens(to_tokens(rgb), to_tokens(thermal));
    return to_spatial(fused, rgb.size(2), rgb.size(3));
}

void MultiModalFusionImpl::set_weight_override(std::optional<double> value) {
    for (auto& block : blocks_) block->set_weight_override(value);
}

IntraModalBridgeImpl::IntraModalBridgeImpl(const TransformerOptions& options, std::int64_t iterations) {
    for (std::int64_t i = 0; i < iterations; ++i) {
        auto holder = register_module("iter" + std::to_string(i + 1), std::make_shared<torch::nn::Module>());
        layers_.push_back(holder->register_module("trans", TransformerLayer(options)));
    }
}

torch::Tensor IntraModalBridgeImpl::forward(const torch::Tensor& spatial) {
    auto tokens = to_tokens(spatial);
    for (auto& layer : layers_) tokens = layer(tokens);
    return to_spatial(tokens, spatial.size(2), spatial.size(3));
}

SimpleFusionImpl::SimpleFusionImpl(FusionKind kind, std::int64_t channels) : kind_(kind) {
    const auto c = channels;
    switch (kind) {
        case FusionKind::kSimpleSum:
            break;
        case FusionKind::kSimpleConcat:
            merge = register_module("merge", ConvBnRelu(2 * c, c, 1));
            break;
        case FusionKind::kPixelAttention:
            attn_hidden = register_module("attn_hidden", ConvBnRelu(2 * c, c, 3));
            attn_logits = register_module("attn_logits", torch::nn::Conv2d(torch::nn::Conv2dOptions(c, 2, 1)));
            break;
        case FusionKind::kAffineTransform:
            affine_hidden = register_module("affine_hidden", ConvBnRelu(c, c, 3));
            gamma = register_module("gamma", torch::nn::Conv2d(torch::nn::Conv2dOptions(c, c, 1)));
            beta = register_module("beta", torch::nn::Conv2d(torch::nn::Conv2dOptions(c, c, 1)));
            break;
        default:
            throw ConfigError("SimpleFusion does not implement " + std::string(to_string(kind)));
    }
}

torch::Tensor SimpleFusionImpl::forward(const torch::Tensor& rgb, const torch::Tensor& thermal) {
    if (rgb.sizes() != thermal.sizes()) throw InputError("fusion: RGB and thermal features differ in shape");
    switch (kind_) {
        case FusionKind::kSimpleSum:
            return rgb + thermal;
        case FusionKind::kSimpleConcat:
            return merge(torch::cat({rgb, thermal}, 1));
        case FusionKind::kPixelAttention: {
            const auto a = torch::softmax(attn_logits(attn_hidden(torch::cat({rgb, thermal}, 1))), 1);
            return a.narrow(1, 0, 1) * rgb + a.narrow(1, 1, 1) * thermal;
        }
        case FusionKind::kAffineTransform: {
            const auto h = affine_hidden(thermal);
            return rgb * (1.0 + gamma(h)) + beta(h);
        }
        default:
            break;
    }
    throw ConfigError("unsupported fusion kind");
}

}  // namespace glasseg::nnet
