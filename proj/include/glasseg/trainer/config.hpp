#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "glasseg/datakit/augment.hpp"

namespace glasseg::trainer {

struct TrainConfig {
    int batch_size = 16;
    double lr_initial = 1e-4;
    double lr_after = 1e-5;
    int lr_switch_epoch = 200;
    int total_epochs = 300;
    double weight_decay = 1e-4;
    /// Global gradient-norm limit; 0 disables clipping.
    double grad_clip = 1.0;
    std::uint64_t seed = 0;
    bool augment_enabled = true;
    /// rng_seed inside is ignored; per-sample seeds derive from `seed`.
    datakit::AugmentConfig augment;
    std::string device = "cpu";
    bool deterministic = false;
    /// Write a numbered checkpoint every this many epochs (0: only last and best).
    int checkpoint_every = 10;
    /// Fraction of scenes held out for best-checkpoint selection.
    double validation_fraction = 0.1;
    /// Stop after this many optimizer steps (0: no limit).
    std::int64_t max_steps = 0;

    /// Throws ConfigError when an invariant is violated.
    void validate() const;
};

/// Step schedule: lr_initial before lr_switch_epoch, lr_after from then on.
double lr_schedule(int epoch, const TrainConfig& cfg);

nlohmann::json to_json(const TrainConfig& cfg);
TrainConfig train_config_from_json(const nlohmann::json& j);

}  // namespace glasseg::trainer
