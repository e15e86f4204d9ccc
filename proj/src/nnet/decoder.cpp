#include "glasseg/nnet/decoder.hpp"

#include "glasseg/core/errors.hpp"

namespace glasseg::nnet {

SpatialAttentionImpl::SpatialAttentionImpl(std::int64_t width) {
    conv1 = register_module("conv1", ConvBnRelu(2 * width, 2 * width, 3));
    conv2 = register_module("conv2", ConvBnRelu(2 * width, 2 * width, 3));
    conv3 = register_module("conv3", torch::nn::Conv2d(torch::nn::Conv2dOptions(2 * width, 1, 1)));
}

torch::Tensor SpatialAttentionImpl::forward(const torch::Tensor& skip, const torch::Tensor& d) {
    return torch::sigmoid(conv3(conv2(conv1(torch::cat({skip, d}, 1)))));
}

DecoderBlockImpl::DecoderBlockImpl(const DecoderBlockOptions& options) : options_(options) {
    const auto w = options.width;
    if (options.rgb_skip == 0 && options.thermal_skip == 0) {
        throw ConfigError("decoder block needs at least one skip stream");
    }
    if (options.rgb_skip > 0) lateral_r = register_module("lateral_r", ConvBnRelu(options.rgb_skip, w, 1));
    if (options.thermal_skip > 0) {
        lateral_t = register_module("lateral_t", ConvBnRelu(options.thermal_skip, w, 1));
    }
    if (options.kind == DecoderKind::kWeighted) {
        if (lateral_r) att_r = register_module("att_r", SpatialAttention(w));
        if (lateral_t) att_t = register_module("att_t", SpatialAttention(w));
    } else if (options.kind == DecoderKind::kDirectConcat) {
        const std::int64_t streams = 1 + (lateral_r ? 1 : 0) + (lateral_t ? 1 : 0);
        merge = register_module("merge", ConvBnRelu(streams * w, w, 1));
    }
    out_conv = register_module("out_conv", ConvBnRelu(w, options.out_width, 3));
}

torch::Tensor DecoderBlockImpl::weight(SpatialAttention& attention, const torch::Tensor& e,
                                       const torch::Tensor& d) const {
    if (weight_override_) {
        return torch::full({d.size(0), 1, d.size(2), d.size(3)}, *weight_override_, d.options());
    }
    return attention(e, d);
}

torch::Tensor DecoderBlockImpl::combine(const torch::Tensor& e_r, const torch::Tensor& e_t, const torch::Tensor& d,
                                        DecoderTrace* trace) {
    for (const auto* e : {&e_r, &e_t}) {
        if (e->defined() && e->sizes() != d.sizes()) {
            throw InputError("decoder block: skip features and d differ in shape");
        }
    }
    if (e_r.defined() != static_cast<bool>(lateral_r) || e_t.defined() != static_cast<bool>(lateral_t)) {
        throw InputError("decoder block: skip streams do not match the block configuration");
    }
    torch::Tensor out;
    switch (options_.kind) {
        case DecoderKind::kWeighted: {
            out = d;
            if (e_r.defined()) {
                auto w_r = weight(att_r, e_r, d);
                if (trace) trace->w_r = w_r;
                out = out + w_r * e_r;
            }
            if (e_t.defined()) {
                auto w_t = weight(att_t, e_t, d);
                if (trace) trace->w_t = w_t;
                out = out + w_t * e_t;
            }
            break;
        }
        case DecoderKind::kDirectSum:
            out = d;
            if (e_r.defined()) out = out + e_r;
            if (e_t.defined()) out = out + e_t;
            break;
        case DecoderKind::kDirectConcat: {
            std::vector<torch::Tensor> parts;
            if (e_r.defined()) parts.push_back(e_r);
            if (e_t.defined()) parts.push_back(e_t);
            parts.push_back(d);
            out = merge(torch::cat(parts, 1));
            break;
        }
    }
    if (trace) trace->combined = out;
    return out;
}

torch::Tensor DecoderBlockImpl::forward(const torch::Tensor& skip_r, const torch::Tensor& skip_t,
                                        const torch::Tensor& d, DecoderTrace* trace) {
    if (d.dim() != 4 || d.size(1) != options_.width) throw InputError("decoder block: d has the wrong channel count");
    const auto e_r = lateral_r ? lateral_r(skip_r) : torch::Tensor();
    const auto e_t = lateral_t ? lateral_t(skip_t) : torch::Tensor();
    return upsample2x(out_conv(combine(e_r, e_t, d, trace)));
}

DecoderImpl::DecoderImpl(const ModelConfig& config, const std::array<std::int64_t, 4>& rgb_stages,
                         const std::array<std::int64_t, 4>& thermal_stages) {
    for (int k = 0; k < 4; ++k) {
        DecoderBlockOptions options;
        options.width = config.decoder_width(k);
        options.out_width = config.decoder_width(std::min(k + 1, 3));
        options.rgb_skip = rgb_stages[3 - k];
        options.thermal_skip = thermal_stages[3 - k];
        options.kind = config.decoder;
        blocks_[k] = register_module("block" + std::to_string(k + 1), DecoderBlock(options));
    }
    out_channels_ = blocks_[3]->options().out_width;
}

torch::Tensor DecoderImpl::forward(const std::array<torch::Tensor, 4>& skips_r,
                                   const std::array<torch::Tensor, 4>& skips_t, const torch::Tensor& bridge,
                                   std::array<DecoderTrace, 4>* traces) {
    auto d = bridge;
    for (int k = 0; k < 4; ++k) {
        d = blocks_[k]->forward(skips_r[3 - k], skips_t[3 - k], d, traces ? &(*traces)[k] : nullptr);
    }
    return d;
}

void DecoderImpl::set_weight_override(std::optional<double> value) {
    for (auto& block : blocks_) block->set_weight_override(value);
}

}  // namespace glasseg::nnet
