#pragma once

#include <optional>
#include <vector>

#include <torch/torch.h>

#include "glasseg/nnet/config.hpp"
#include "glasseg/nnet/layers.hpp"

namespace glasseg::nnet {

/// State of one MFM iteration, all in token layout (B, N, C) with N = H*W.
struct FusionState {
    torch::Tensor f_r;   // RGB stream passed to the next iteration (undefined after the last one)
    torch::Tensor f_t;   // thermal stream passed to the next iteration (undefined after the last one)
    torch::Tensor f_rt;  // (B, 2N, C): rows [0, N) from RGB, [N, 2N) from thermal
    torch::Tensor w;     // (B, 2N, 1) in (0,1); undefined for the direct-sum/concat variants
};

/// One MFM iteration:
///   f_rt = trans_rt(stack(f_r, f_t))
///   w    = sigmoid(linear_w(trans_w(f_rt)))
///   f_r' = trans_r(f_r) + (w * f_rt)[:N]
///   f_t' = trans_t(f_t) + (w * f_rt)[N:]
/// kMfmDirectSum drops w (w == 1); kMfmDirectConcat replaces each sum with a linear
/// projection of the channel concatenation. The final iteration only produces f_rt and w,
/// since the fused output does not read the updated streams.
class MfmBlockImpl : public torch::nn::Module {
public:
    MfmBlockImpl(const TransformerOptions& options, FusionKind mode, bool final_iteration);

    FusionState forward(const torch::Tensor& f_r, const torch::Tensor& f_t);

    /// (w * f_rt)[:N] + (w * f_rt)[N:] (or its variant), token layout.
    torch::Tensor fuse(const FusionState& state);

    /// Replaces w by a constant. Diagnostic hook for ablation checks.
    void set_weight_override(std::optional<double> value) { weight_override_ = value; }

    [[nodiscard]] bool is_final() const { return final_; }

private:
    std::pair<torch::Tensor, torch::Tensor> split_weighted(const FusionState& state) const;

    FusionKind mode_;
    bool final_;
    std::optional<double> weight_override_;
    TransformerLayer trans_r{nullptr}, trans_t{nullptr}, trans_rt{nullptr}, trans_w{nullptr};
    torch::nn::Linear linear_w{nullptr};
    torch::nn::Linear merge_r{nullptr}, merge_t{nullptr}, merge_fused{nullptr};
};
TORCH_MODULE(MfmBlock);

/// Iterated MFM blocks (named iter1..iterN) bridging the two bottleneck features.
class MultiModalFusionImpl : public torch::nn::Module {
public:
    MultiModalFusionImpl(const TransformerOptions& options, FusionKind mode, std::int64_t iterations);

    /// Spatial (B, C, H, W) inputs with positional encoding already added; spatial output.
    torch::Tensor forward(const torch::Tensor& rgb, const torch::Tensor& thermal);

    /// Token-layout forward that also returns every iteration's state.
    torch::Tensor forward_tokens(const torch::Tensor& f_r, const torch::Tensor& f_t,
                                 std::vector<FusionState>* trace = nullptr);

    void set_weight_override(std::optional<double> value);
    [[nodiscard]] const std::vector<MfmBlock>& blocks() const { return blocks_; }

private:
    std::vector<MfmBlock> blocks_;
};
TORCH_MODULE(MultiModalFusion);

/// Single-modality bridge: iterated transformer layers on one stream (iter1..iterN.trans).
class IntraModalBridgeImpl : public torch::nn::Module {
public:
    IntraModalBridgeImpl(const TransformerOptions& options, std::int64_t iterations);
    torch::Tensor forward(const torch::Tensor& spatial);

private:
    std::vector<TransformerLayer> layers_;
};
TORCH_MODULE(IntraModalBridge);

/// Single-step replacements for MFM operating on spatial features:
///   SFS: f_r + f_t
///   SFC: 1x1 conv-bn-relu over concat(f_r, f_t)
///   PAF: per-pixel softmax attention over the two modalities, weights from a conv head on the concat
///   AT:  thermal-conditioned affine modulation, f_r * (1 + gamma(f_t)) + beta(f_t)
class SimpleFusionImpl : public torch::nn::Module {
public:
    SimpleFusionImpl(FusionKind kind, std::int64_t channels);
    torch::Tensor forward(const torch::Tensor& rgb, const torch::Tensor& thermal);

private:
    FusionKind kind_;
    ConvBnRelu merge{nullptr};
    ConvBnRelu attn_hidden{nullptr};
    torch::nn::Conv2d attn_logits{nullptr};
    ConvBnRelu affine_hidden{nullptr};
    torch::nn::Conv2d gamma{nullptr}, beta{nullptr};
};
TORCH_MODULE(SimpleFusion);

}  // namespace glasseg::nnet
