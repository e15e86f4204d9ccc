#include "glasseg/trainer/loss.hpp"

#include "glasseg/core/errors.hpp"

namespace glasseg::trainer {

torch::Tensor bce_loss_with_logits(const torch::Tensor& logits, const torch::Tensor& gt) {
    if (logits.sizes() != gt.sizes()) throw InputError("bce_loss: prediction and target differ in shape");
    return torch::binary_cross_entropy_with_logits(logits, gt.to(logits.dtype()));
}

torch::Tensor bce_loss(const torch::Tensor& prob, const torch::Tensor& gt) {
    const double eps = 1e-12;
    const auto p = prob.clamp(eps, 1.0 - eps);
    return bce_loss_with_logits(torch::log(p) - torch::log1p(-p), gt);
}

}  // namespace glasseg::trainer
