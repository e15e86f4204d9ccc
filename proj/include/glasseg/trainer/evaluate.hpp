#pragma once

#include <filesystem>
#include <functional>
#include <vector>

#include <torch/torch.h>

#include "glasseg/datakit/sample.hpp"
#include "glasseg/metrics/metrics.hpp"
#include "glasseg/nnet/model.hpp"

namespace glasseg::trainer {

/// Maps a sample to a probability map of the sample's size.
using Predictor = std::function<ProbabilityMap(const datakit::RgbtSample&)>;

/// Nearest multiple of 32 (at least 32).
int network_dimension(int pixels);

/// Full-image inference: inputs are bilinearly resized to multiples of 32, the probability
/// map is resized back. Only the modalities the model consumes are read, so thermal may be
/// empty for RGB-only models and vice versa.
ProbabilityMap predict(nnet::GlassSegNet& model, const datakit::RgbtSample& sample,
                       const torch::Device& device = torch::kCPU);

/// Predictor running `model` in eval mode without gradients.
Predictor model_predictor(nnet::GlassSegNet model, torch::Device device = torch::kCPU);

/// Runs the predictor over every sample (each needs a mask) and aggregates the metrics.
metrics::MetricsReport evaluate(const Predictor& predictor, const std::vector<datakit::RgbtSample>& samples,
                                const metrics::EvalOptions& options = {});

/// Loads a model checkpoint and evaluates it.
metrics::MetricsReport evaluate_checkpoint(const std::filesystem::path& checkpoint,
                                           const std::vector<datakit::RgbtSample>& samples,
                                           const metrics::EvalOptions& options = {},
                                           torch::Device device = torch::kCPU);

}  // namespace glasseg::trainer
