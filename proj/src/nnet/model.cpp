#include "glasseg/nnet/model.hpp"

#include "glasseg/core/errors.hpp"

namespace glasseg::nnet {

namespace {

bool has_rgb_encoder(InputKind kind) { return kind != InputKind::kThermalOnly; }
bool has_thermal_encoder(InputKind kind) { return kind != InputKind::kRgbOnly; }

torch::Tensor to_three_channels(const torch::Tensor& image, const char* what) {
    if (!image.defined() || image.dim() != 4) {
        throw InputError(std::string(what) + " image must be a (B,C,H,W) tensor");
    }
    if (image.size(1) == 3) return image;
    if (image.size(1) == 1) return image.expand({-1, 3, -1, -1});
    throw InputError(std::string(what) + " image must have 1 or 3 channels");
}

void require_channels(const torch::Tensor& t, std::int64_t c, const char* what) {
    if (!t.defined() || t.dim() != 4 || t.size(1) != c) {
        throw InputError(std::string(what) + " input must be (B," + std::to_string(c) + ",H,W)");
    }
}

}  // namespace

ModelInput make_input(InputKind kind, const torch::Tensor& rgb, const torch::Tensor& thermal) {
    switch (kind) {
        case InputKind::kRgbt:
            return DualModalityInput{rgb, thermal};
        case InputKind::kRgbOnly:
        case InputKind::kDualRgb:
            return SingleModalityInput{rgb};
        case InputKind::kThermalOnly:
        case InputKind::kDualThermal:
            return SingleModalityInput{thermal};
    }
    throw ConfigError("unknown input kind");
}

GlassSegNetImpl::GlassSegNetImpl(const ModelConfig& config, bool fetch_pretrained) : config_(config) {
    config_.validate();
    const auto c = config_.channels;
    std::array<std::int64_t, 4> rgb_stages{0, 0, 0, 0};
    std::array<std::int64_t, 4> thermal_stages{0, 0, 0, 0};
    if (has_rgb_encoder(config_.input)) {
        encoder_rgb_ = register_module("encoder_rgb", Backbone(config_.backbone));
        rgb_stages = encoder_rgb_->stage_channels();
        bridge_rgb_ = register_module("bridge_rgb", ConvBnRelu(rgb_stages[3], c, 1));
    }
    if (has_thermal_encoder(config_.input)) {
        encoder_thermal_ = register_module("encoder_thermal", Backbone(config_.backbone));
        thermal_stages = encoder_thermal_->stage_channels();
        bridge_thermal_ = register_module("bridge_thermal", ConvBnRelu(thermal_stages[3], c, 1));
    }

    const TransformerOptions topts{c, config_.heads, config_.ffn_dim, config_.dropout};
    const bool two_streams = uses_two_encoders(config_.input);
    if (is_mfm_family(config_.fusion)) {
        if (two_streams) {
            mfm_ = register_module("mfm", MultiModalFusion(topts, config_.fusion, config_.mfm_iterations));
        } else {
            intra_ = register_module("mfm", IntraModalBridge(topts, config_.mfm_iterations));
        }
    } else if (two_streams) {
        fusion_ = register_module("fusion", SimpleFusion(config_.fusion, c));
    }

    decoder_ = register_module("decoder", Decoder(config_, rgb_stages, thermal_stages));
    head_ = register_module("head", torch::nn::Conv2d(torch::nn::Conv2dOptions(decoder_->out_channels(), 1, 3).padding(1)));
    {
        torch::NoGradGuard guard;
        head_->weight.normal_(0.0, 1e-3);
        head_->bias.zero_();
    }

    input_mean_ = register_buffer("input_mean", torch::tensor({0.485, 0.456, 0.406}, torch::kFloat).view({1, 3, 1, 1}));
    input_std_ = register_buffer("input_std", torch::tensor({0.229, 0.224, 0.225}, torch::kFloat).view({1, 3, 1, 1}));

    if (config_.pretrained && fetch_pretrained) {
        const auto path = pretrained_weights_path(config_.backbone);
        if (encoder_rgb_) encoder_rgb_->load_weights(path);
        if (encoder_thermal_) encoder_thermal_->load_weights(path);
    }
}

torch::Tensor GlassSegNetImpl::normalize(const torch::Tensor& image3) const {
    return (image3 - input_mean_.to(image3.dtype())) / input_std_.to(image3.dtype());
}

SegmentationOutput GlassSegNetImpl::forward(const ModelInput& input, ForwardTrace* trace) {
    if (const auto* dual = std::get_if<DualModalityInput>(&input)) {
        if (config_.input != InputKind::kRgbt) {
            throw InputError("a " + std::string(to_string(config_.input)) + " model takes a single image");
        }
        if (!dual->thermal.defined()) throw InputError("rgbt model requires a thermal image");
        require_channels(dual->rgb, 3, "RGB");
        require_channels(dual->thermal, 1, "thermal");
        if (dual->rgb.sizes().slice(2) != dual->thermal.sizes().slice(2)) {
            throw InputError("RGB and thermal images differ in size");
        }
        return forward_slots(dual->rgb, to_three_channels(dual->thermal, "thermal"), trace);
    }
    const auto& single = std::get<SingleModalityInput>(input);
    switch (config_.input) {
        case InputKind::kRgbt:
            throw InputError("rgbt model requires both an RGB and a thermal image");
        case InputKind::kRgbOnly:
            require_channels(single.image, 3, "RGB");
            return forward_slots(single.image, torch::Tensor(), trace);
        case InputKind::kThermalOnly:
            require_channels(single.image, 1, "thermal");
            return forward_slots(torch::Tensor(), to_three_channels(single.image, "thermal"), trace);
        case InputKind::kDualRgb:
            require_channels(single.image, 3, "RGB");
            return forward_slots(single.image, single.image, trace);
        case InputKind::kDualThermal: {
            require_channels(single.image, 1, "thermal");
            const auto t3 = to_three_channels(single.image, "thermal");
            return forward_slots(t3, t3, trace);
        }
    }
    throw ConfigError("unknown input kind");
}

torch::Tensor GlassSegNetImpl::bridge_features(const torch::Tensor& r, const torch::Tensor& t, ForwardTrace* trace) {
    const auto& ref = r.defined() ? r : t;
    const auto pe = positional_encoding(ref.size(2), ref.size(3), config_.channels, ref.options()).unsqueeze(0);
    const auto pr = r.defined() ? bridge_rgb_(r) + pe : torch::Tensor();
    const auto pt = t.defined() ? bridge_thermal_(t) + pe : torch::Tensor();
    if (mfm_) {
        auto* states = trace ? &trace->fusion : nullptr;
        const auto fused = mfm_->forward_tokens(to_tokens(pr), to_tokens(pt), states);
        return to_spatial(fused, ref.size(2), ref.size(3));
    }
    if (fusion_) return fusion_(pr, pt);
    const auto& single = pr.defined() ? pr : pt;
    return intra_ ? intra_(single) : single;
}

SegmentationOutput GlassSegNetImpl::forward_slots(const torch::Tensor& rgb_slot, const torch::Tensor& thermal_slot,
                                                  ForwardTrace* trace) {
    const auto& ref = rgb_slot.defined() ? rgb_slot : thermal_slot;
    if (!ref.defined()) throw InputError("no input image given");
    const auto height = ref.size(2);
    const auto width = ref.size(3);
    if (height % 32 != 0 || width % 32 != 0) {
        throw InputError("input size " + std::to_string(height) + "x" + std::to_string(width) +
                         " is not divisible by 32");
    }
    const bool use_r = static_cast<bool>(encoder_rgb_);
    const bool use_t = static_cast<bool>(encoder_thermal_);
    if ((use_r && !rgb_slot.defined()) || (use_t && !thermal_slot.defined())) {
        throw InputError("missing input for an active encoder slot");
    }

    std::array<torch::Tensor, 4> skips_r, skips_t;
    if (use_r) skips_r = encoder_rgb_(normalize(rgb_slot)).stages;
    if (use_t) skips_t = encoder_thermal_(normalize(thermal_slot)).stages;

    const auto bridge = bridge_features(skips_r[3], skips_t[3], trace);
    if (trace) trace->bridge = bridge;
    const auto d = decoder_(skips_r, skips_t, bridge, trace ? &trace->decoder : nullptr);
    SegmentationOutput out;
    out.logits = resize_bilinear(head_(d), height, width);
    out.probability = torch::sigmoid(out.logits);
    return out;
}

void GlassSegNetImpl::set_fusion_weight_override(std::optional<double> value) {
    if (mfm_) mfm_->set_weight_override(value);
}

void GlassSegNetImpl::set_decoder_weight_override(std::optional<double> value) {
    decoder_->set_weight_override(value);
}

std::int64_t parameter_count(const torch::nn::Module& module) {
    std::int64_t total = 0;
    for (const auto& p : module.parameters()) total += p.numel();
    return total;
}

std::map<std::string, std::int64_t> parameter_breakdown(const torch::nn::Module& module) {
    std::map<std::string, std::int64_t> out;
    for (const auto& item : module.named_parameters()) {
        const auto& key = item.key();
        out[key.substr(0, key.find('.'))] += item.value().numel();
    }
    return out;
}

}  // namespace glasseg::nnet
