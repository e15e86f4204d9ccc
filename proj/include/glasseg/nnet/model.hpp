#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>

#include <torch/torch.h>

#include "glasseg/nnet/backbone.hpp"
#include "glasseg/nnet/config.hpp"
#include "glasseg/nnet/decoder.hpp"
#include "glasseg/nnet/fusion.hpp"

namespace glasseg::nnet {

/// RGB (B,3,H,W) and thermal (B,1,H,W), both in [0,1].
struct DualModalityInput {
    torch::Tensor rgb;
    torch::Tensor thermal;
};

/// One image: (B,3,H,W) RGB or (B,1,H,W) thermal, depending on the model's input kind.
struct SingleModalityInput {
    torch::Tensor image;
};

/// rgbt models take DualModalityInput; every other input kind takes SingleModalityInput.
using ModelInput = std::variant<DualModalityInput, SingleModalityInput>;

/// Picks the modality (or both) that `kind` consumes.
ModelInput make_input(InputKind kind, const torch::Tensor& rgb, const torch::Tensor& thermal);

struct SegmentationOutput {
    torch::Tensor logits;       // (B,1,H,W)
    torch::Tensor probability;  // sigmoid(logits)
};

/// Intermediate values of a forward pass, filled on request.
struct ForwardTrace {
    std::vector<FusionState> fusion;
    std::array<DecoderTrace, 4> decoder;
    torch::Tensor bridge;  // fused bottleneck feature (B,C,h,w)
};

class GlassSegNetImpl : public torch::nn::Module {
public:
    /// `fetch_pretrained` loads backbone weights from the cache when config.pretrained is set.
    explicit GlassSegNetImpl(const ModelConfig& config, bool fetch_pretrained = true);

    SegmentationOutput forward(const ModelInput& input, ForwardTrace* trace = nullptr);

    /// Runs the network on already prepared 3-channel slot images (normalized internally).
    /// The rgb slot feeds encoder_rgb and the thermal slot encoder_thermal; single-stream
    /// models ignore the slot they lack.
    SegmentationOutput forward_slots(const torch::Tensor& rgb_slot, const torch::Tensor& thermal_slot,
                                     ForwardTrace* trace = nullptr);

    [[nodiscard]] const ModelConfig& config() const { return config_; }

    /// Forces all MFM weights w to a constant (nullopt restores the learned weights).
    void set_fusion_weight_override(std::optional<double> value);
    /// Forces all decoder attention weights to a constant.
    void set_decoder_weight_override(std::optional<double> value);

    MultiModalFusion& mfm() { return mfm_; }
    Decoder& decoder() { return decoder_; }
    Backbone& encoder_rgb() { return encoder_rgb_; }
    Backbone& encoder_thermal() { return encoder_thermal_; }

private:
    torch::Tensor normalize(const torch::Tensor& image3) const;
    torch::Tensor bridge_features(const torch::Tensor& r, const torch::Tensor& t, ForwardTrace* trace);

    ModelConfig config_;
    Backbone encoder_rgb_{nullptr}, encoder_thermal_{nullptr};
    ConvBnRelu bridge_rgb_{nullptr}, bridge_thermal_{nullptr};
    MultiModalFusion mfm_{nullptr};
    IntraModalBridge intra_{nullptr};
    SimpleFusion fusion_{nullptr};
    Decoder decoder_{nullptr};
    torch::nn::Conv2d head_{nullptr};
    torch::Tensor input_mean_, input_std_;
};
TORCH_MODULE(GlassSegNet);

/// Number of trainable scalars.
std::int64_t parameter_count(const torch::nn::Module& module);
/// Trainable scalars grouped by top-level child name (encoder_rgb, mfm, decoder, ...).
std::map<std::string, std::int64_t> parameter_breakdown(const torch::nn::Module& module);

}  // namespace glasseg::nnet
