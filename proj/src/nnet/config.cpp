#include "glasseg/nnet/config.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <utility>

#include "glasseg/core/errors.hpp"

namespace glasseg::nnet {

namespace {

template <typename Enum, std::size_t N>
using NameTable = std::array<std::pair<Enum, std::string_view>, N>;

constexpr NameTable<BackboneKind, 5> kBackboneNames{{
    {BackboneKind::kResNet18, "residual-18"},
    {BackboneKind::kResNet34, "residual-34"},
    {BackboneKind::kResNet50, "residual-50"},
    {BackboneKind::kResNet101, "residual-101"},
    {BackboneKind::kTinyTest, "tiny-test"},
}};

constexpr NameTable<FusionKind, 7> kFusionNames{{
    {FusionKind::kMfm, "MFM"},
    {FusionKind::kMfmDirectSum, "MFM-DS"},
    {FusionKind::kMfmDirectConcat, "MFM-DC"},
    {FusionKind::kSimpleSum, "SFS"},
    {FusionKind::kSimpleConcat, "SFC"},
    {FusionKind::kPixelAttention, "PAF"},
    {FusionKind::kAffineTransform, "AT"},
}};

constexpr NameTable<DecoderKind, 3> kDecoderNames{{
    {DecoderKind::kWeighted, "weighted"},
    {DecoderKind::kDirectSum, "DS"},
    {DecoderKind::kDirectConcat, "DC"},
}};

constexpr NameTable<InputKind, 5> kInputNames{{
    {InputKind::kRgbt, "rgbt"},
    {InputKind::kRgbOnly, "rgb-only"},
    {InputKind::kThermalOnly, "thermal-only"},
    {InputKind::kDualRgb, "dual-rgb"},
    {InputKind::kDualThermal, "dual-thermal"},
}};

template <typename Enum, std::size_t N>
std::string_view name_of(const NameTable<Enum, N>& table, Enum kind) {
    for (const auto& [k, name] : table) {
        if (k == kind) return name;
    }
    return "unknown";
}

template <typename Enum, std::size_t N>
Enum parse_name(const NameTable<Enum, N>& table, std::string_view text, std::string_view what) {
    auto same = [](std::string_view a, std::string_view b) {
        return std::ranges::equal(a, b, [](char x, char y) {
            return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
        });
    };
    for (const auto& [k, name] : table) {
        if (same(name, text)) return k;
    }
    std::string known;
    for (const auto& entry : table) known += (known.empty() ? "" : ", ") + std::string(entry.second);
    throw ConfigError("unknown " + std::string(what) + " '" + std::string(text) + "' (expected one of: " + known + ")");
}

}  // namespace

std::string_view to_string(BackboneKind kind) { return name_of(kBackboneNames, kind); }
std::string_view to_string(FusionKind kind) { return name_of(kFusionNames, kind); }
std::string_view to_string(DecoderKind kind) { return name_of(kDecoderNames, kind); }
std::string_view to_string(InputKind kind) { return name_of(kInputNames, kind); }

BackboneKind parse_backbone(std::string_view text) {
    if (text == "resnet18") return BackboneKind::kResNet18;
    if (text == "resnet34") return BackboneKind::kResNet34;
    if (text == "resnet50") return BackboneKind::kResNet50;
    if (text == "resnet101") return BackboneKind::kResNet101;
    return parse_name(kBackboneNames, text, "backbone");
}
FusionKind parse_fusion(std::string_view text) { return parse_name(kFusionNames, text, "fusion kind"); }
DecoderKind parse_decoder(std::string_view text) { return parse_name(kDecoderNames, text, "decoder kind"); }
InputKind parse_input(std::string_view text) { return parse_name(kInputNames, text, "input kind"); }

bool is_mfm_family(FusionKind kind) {
    return kind == FusionKind::kMfm || kind == FusionKind::kMfmDirectSum || kind == FusionKind::kMfmDirectConcat;
}

bool uses_two_encoders(InputKind kind) {
    return kind == InputKind::kRgbt || kind == InputKind::kDualRgb || kind == InputKind::kDualThermal;
}

void ModelConfig::validate() const {
    if (channels < 4 || channels % 4 != 0) throw ConfigError("model.channels must be a positive multiple of 4");
    if (heads < 1 || channels % heads != 0) throw ConfigError("model.channels must be divisible by model.heads");
    if (mfm_iterations < 1) throw ConfigError("model.mfm_iterations must be >= 1");
    if (ffn_dim < 1) throw ConfigError("model.ffn_dim must be >= 1");
    if (dropout < 0.0 || dropout >= 1.0) throw ConfigError("model.dropout must lie in [0,1)");
}

std::int64_t ModelConfig::decoder_width(int index) const {
    return std::max<std::int64_t>(channels >> index, 4);
}

ModelConfig ModelConfig::canonical() { return ModelConfig{}; }

ModelConfig ModelConfig::tiny_test() {
    ModelConfig c;
    c.backbone = BackboneKind::kTinyTest;
    c.channels = 32;
    c.heads = 4;
    c.ffn_dim = 64;
    return c;
}

nlohmann::json to_json(const ModelConfig& c) {
    return {
        {"backbone", to_string(c.backbone)},
        {"pretrained", c.pretrained},
        {"channels", c.channels},
        {"mfm_iterations", c.mfm_iterations},
        {"heads", c.heads},
        {"ffn_dim", c.ffn_dim},
        {"dropout", c.dropout},
        {"fusion", to_string(c.fusion)},
        {"decoder", to_string(c.decoder)},
        {"input", to_string(c.input)},
    };
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    try {
        if (j.contains("backbone")) c.backbone = parse_backbone(j.at("backbone").get<std::string>());
        if (j.contains("pretrained")) c.pretrained = j.at("pretrained").get<bool>();
        if (j.contains("channels")) c.channels = j.at("channels").get<std::int64_t>();
        if (j.contains("mfm_iterations")) c.mfm_iterations = j.at("mfm_iterations").get<std::int64_t>();
        if (j.contains("heads")) c.heads = j.at("heads").get<std::int64_t>();
        if (j.contains("ffn_dim")) c.ffn_dim = j.at("ffn_dim").get<std::int64_t>();
        if (j.contains("dropout")) c.dropout = j.at("dropout").get<double>();
        if (j.contains("fusion")) c.fusion = parse_fusion(j.at("fusion").get<std::string>());
        if (j.contains("decoder")) c.decoder = parse_decoder(j.at("decoder").get<std::string>());
        if (j.contains("input")) c.input = parse_input(j.at("input").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed model config: ") + e.what());
    }
    c.validate();
    return c;
}

}  // namespace glasseg::nnet
