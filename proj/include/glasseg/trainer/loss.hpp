#pragma once

#include <torch/torch.h>

namespace glasseg::trainer {

/// Mean binary cross-entropy on logits (stable log-sum-exp form).
torch::Tensor bce_loss_with_logits(const torch::Tensor& logits, const torch::Tensor& gt);

/// Mean binary cross-entropy on probabilities in (0,1). Evaluated through the logit form;
/// probabilities are clamped to [1e-12, 1 - 1e-12] first.
torch::Tensor bce_loss(const torch::Tensor& prob, const torch::Tensor& gt);

}  // namespace glasseg::trainer
