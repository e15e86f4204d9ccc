#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>
#include <torch/torch.h>

#include "glasseg/datakit/sample.hpp"
#include "glasseg/nnet/model.hpp"
#include "glasseg/trainer/config.hpp"

namespace glasseg::trainer {

struct StepRecord {
    std::int64_t step = 0;
    int epoch = 0;
    double loss = 0.0;
    double lr = 0.0;
};

struct EpochRecord {
    int epoch = 0;
    double mean_loss = 0.0;
    double lr = 0.0;
    std::optional<double> val_iou;
};

struct TrainHistory {
    std::vector<StepRecord> steps;
    std::vector<EpochRecord> epochs;
    /// Epoch of the best checkpoint: highest validation IOU, or lowest mean loss without validation.
    int best_epoch = -1;
    double best_score = 0.0;
};

nlohmann::json to_json(const TrainHistory& history);
TrainHistory history_from_json(const nlohmann::json& j);

/// Raised when the loss becomes NaN or infinite.
class TrainingDiverged : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TrainOptions {
    /// Checkpoints (last.pt, best.pt, epoch_NNNN.pt) and train_log.jsonl go here; empty writes nothing.
    std::filesystem::path out_dir;
    /// Continue from a training checkpoint written by a previous run.
    std::optional<std::filesystem::path> resume_from;
    std::function<void(const StepRecord&)> on_step;
};

struct TrainResult {
    nnet::GlassSegNet model{nullptr};
    TrainHistory history;
    std::optional<std::filesystem::path> last_checkpoint;
    std::optional<std::filesystem::path> best_checkpoint;
};

/// Splits sample indices into (train, validation) by holding out whole scenes. With a single
/// scene, or a fraction that rounds to zero scenes, validation stays empty.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_by_scene(
    const std::vector<datakit::RgbtSample>& samples, double validation_fraction, std::uint64_t seed);

/// Mini-batch AdamW training with the step learning-rate schedule, global-norm gradient
/// clipping and per-sample augmentation. Every random choice derives from cfg.seed.
TrainResult train(const nnet::ModelConfig& model_cfg, const TrainConfig& cfg,
                  const std::vector<datakit::RgbtSample>& dataset, const TrainOptions& options = {});

/// Training checkpoint: model tensors under their usual names (so nnet::load_model reads it),
/// plus optimizer state, epoch/step counters, the torch RNG state, config and history.
void save_training_checkpoint(const std::filesystem::path& path, const nnet::GlassSegNet& model,
                              torch::optim::AdamW& optimizer, const TrainConfig& cfg, int next_epoch,
                              std::int64_t step, const TrainHistory& history);

/// Puts the process in reproducible mode: one intra-op thread, deterministic kernels.
void enable_determinism();

}  // namespace glasseg::trainer
