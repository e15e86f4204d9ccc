#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include <json.hpp>

namespace glasseg::nnet {

enum class BackboneKind { kResNet18, kResNet34, kResNet50, kResNet101, kTinyTest };

/// Bridge between the encoders and the decoder. kMfm is the iterative transformer fusion;
/// kMfmDirectSum / kMfmDirectConcat keep the MFM pipeline but drop the attention weights;
/// the rest replace MFM with single-step fusion of the two bottleneck features.
enum class FusionKind {
    kMfm,
    kMfmDirectSum,
    kMfmDirectConcat,
    kSimpleSum,
    kSimpleConcat,
    kPixelAttention,
    kAffineTransform,
};

enum class DecoderKind { kWeighted, kDirectSum, kDirectConcat };

enum class InputKind { kRgbt, kRgbOnly, kThermalOnly, kDualRgb, kDualThermal };

std::string_view to_string(BackboneKind kind);
std::string_view to_string(FusionKind kind);
std::string_view to_string(DecoderKind kind);
std::string_view to_string(InputKind kind);

BackboneKind parse_backbone(std::string_view text);
FusionKind parse_fusion(std::string_view text);
DecoderKind parse_decoder(std::string_view text);
InputKind parse_input(std::string_view text);

/// True for the MFM family (which keeps transformer layers in the bridge).
bool is_mfm_family(FusionKind kind);
/// True when both encoder slots are populated.
bool uses_two_encoders(InputKind kind);

struct ModelConfig {
    BackboneKind backbone = BackboneKind::kResNet50;
    bool pretrained = false;
    std::int64_t channels = 256;
    std::int64_t mfm_iterations = 4;
    std::int64_t heads = 8;
    std::int64_t ffn_dim = 2048;
    double dropout = 0.1;
    FusionKind fusion = FusionKind::kMfm;
    DecoderKind decoder = DecoderKind::kWeighted;
    InputKind input = InputKind::kRgbt;

    /// Throws ConfigError when an invariant is violated.
    void validate() const;

    /// Width of decoder block `index` (0-based); block 0 runs at `channels`, each later one halves.
    [[nodiscard]] std::int64_t decoder_width(int index) const;

    /// Two ResNet-50 encoders, C = 256, four MFM iterations.
    static ModelConfig canonical();
    /// CPU-sized configuration used by the test suites.
    static ModelConfig tiny_test();

    bool operator==(const ModelConfig&) const = default;
};

nlohmann::json to_json(const ModelConfig& config);
ModelConfig model_config_from_json(const nlohmann::json& j);

}  // namespace glasseg::nnet
