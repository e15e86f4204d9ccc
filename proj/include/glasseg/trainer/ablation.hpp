#pragma once

#include <string>
#include <vector>

#include "glasseg/datakit/sample.hpp"
#include "glasseg/metrics/metrics.hpp"
#include "glasseg/nnet/config.hpp"
#include "glasseg/trainer/config.hpp"

namespace glasseg::trainer {

struct AblationVariant {
    std::string name;
    nnet::ModelConfig model;
};

/// Cartesian product of the requested axes on top of `base`. Empty axes keep the base value.
/// Names read "<input>/<fusion>/<decoder>/<backbone>".
std::vector<AblationVariant> ablation_grid(const nnet::ModelConfig& base, const std::vector<nnet::InputKind>& inputs,
                                           const std::vector<nnet::FusionKind>& fusions,
                                           const std::vector<nnet::DecoderKind>& decoders,
                                           const std::vector<nnet::BackboneKind>& backbones = {});

struct AblationRow {
    std::string name;
    nnet::ModelConfig model;
    metrics::MetricsReport report;
    double final_loss = 0.0;
};

/// Trains every variant with the same TrainConfig (and so the same seed) on `train_set`,
/// then evaluates on `test_set`.
std::vector<AblationRow> run_ablation_matrix(const std::vector<AblationVariant>& variants, const TrainConfig& cfg,
                                             const std::vector<datakit::RgbtSample>& train_set,
                                             const std::vector<datakit::RgbtSample>& test_set);

std::string render_ablation_table(const std::vector<AblationRow>& rows);

/// Builds the model, runs one forward/backward/AdamW step on `sample` and returns the loss.
double smoke_step(const nnet::ModelConfig& config, const datakit::RgbtSample& sample, std::uint64_t seed = 0);

}  // namespace glasseg::trainer
