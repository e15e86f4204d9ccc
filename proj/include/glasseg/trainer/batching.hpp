#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <torch/torch.h>

#include "glasseg/datakit/sample.hpp"

namespace glasseg::trainer {

/// (1,3,H,W) float tensor from an RGB-ordered CV_32FC3 image.
torch::Tensor rgb_to_tensor(const cv::Mat3f& rgb);
/// (1,1,H,W) float tensor from a single-channel float image.
torch::Tensor gray_to_tensor(const cv::Mat1f& gray);
/// (1,1,H,W) float tensor of 0/1 values.
torch::Tensor mask_to_tensor(const BinaryMask& mask);
/// (H,W) probability map from a (1,1,H,W) or (H,W) tensor.
ProbabilityMap tensor_to_map(const torch::Tensor& t);

struct Batch {
    torch::Tensor rgb;      // (B,3,H,W)
    torch::Tensor thermal;  // (B,1,H,W)
    torch::Tensor mask;     // (B,1,H,W)
    std::vector<std::size_t> indices;
};

/// Stacks already equally sized samples; every sample needs a mask.
Batch collate(std::span<const datakit::RgbtSample> samples, std::vector<std::size_t> indices);

/// Sample order of one epoch; a pure function of (seed, epoch).
std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch);

/// Augmentation seed for one sample draw; a pure function of its arguments.
std::uint64_t sample_seed(std::uint64_t seed, int epoch, std::size_t index);

}  // namespace glasseg::trainer
