#include "glasseg/trainer/config.hpp"

#include "glasseg/core/errors.hpp"

namespace glasseg::trainer {

void TrainConfig::validate() const {
    if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (total_epochs < 1) throw ConfigError("train.total_epochs must be >= 1");
    if (lr_switch_epoch >= total_epochs) throw ConfigError("train.lr_switch_epoch must be < train.total_epochs");
    if (lr_initial <= 0.0 || lr_after <= 0.0) throw ConfigError("train learning rates must be positive");
    if (weight_decay < 0.0) throw ConfigError("train.weight_decay must be >= 0");
    if (grad_clip < 0.0) throw ConfigError("train.grad_clip must be >= 0");
    if (checkpoint_every < 0) throw ConfigError("train.checkpoint_every must be >= 0");
    if (validation_fraction < 0.0 || validation_fraction >= 1.0) {
        throw ConfigError("train.validation_fraction must lie in [0,1)");
    }
    if (max_steps < 0) throw ConfigError("train.max_steps must be >= 0");
    augment.validate();
}

double lr_schedule(int epoch, const TrainConfig& cfg) {
    return epoch < cfg.lr_switch_epoch ? cfg.lr_initial : cfg.lr_after;
}

nlohmann::json to_json(const TrainConfig& c) {
    return {
        {"batch_size", c.batch_size},
        {"lr_initial", c.lr_initial},
        {"lr_after", c.lr_after},
        {"lr_switch_epoch", c.lr_switch_epoch},
        {"total_epochs", c.total_epochs},
        {"weight_decay", c.weight_decay},
        {"grad_clip", c.grad_clip},
        {"seed", c.seed},
        {"augment_enabled", c.augment_enabled},
        {"augment",
         {{"flip_probability", c.augment.flip_probability},
          {"scale_low", c.augment.scale_low},
          {"scale_high", c.augment.scale_high},
          {"crop_height", c.augment.crop_height},
          {"crop_width", c.augment.crop_width},
          {"pad_if_needed", c.augment.pad_if_needed}}},
        {"device", c.device},
        {"deterministic", c.deterministic},
        {"checkpoint_every", c.checkpoint_every},
        {"validation_fraction", c.validation_fraction},
        {"max_steps", c.max_steps},
    };
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    try {
        c.batch_size = j.value("batch_size", c.batch_size);
        c.lr_initial = j.value("lr_initial", c.lr_initial);
        c.lr_after = j.value("lr_after", c.lr_after);
        c.lr_switch_epoch = j.value("lr_switch_epoch", c.lr_switch_epoch);
        c.total_epochs = j.value("total_epochs", c.total_epochs);
        c.weight_decay = j.value("weight_decay", c.weight_decay);
        c.grad_clip = j.value("grad_clip", c.grad_clip);
        c.seed = j.value("seed", c.seed);
        c.augment_enabled = j.value("augment_enabled", c.augment_enabled);
        if (j.contains("augment")) {
            const auto& a = j.at("augment");
            c.augment.flip_probability = a.value("flip_probability", c.augment.flip_probability);
            c.augment.scale_low = a.value("scale_low", c.augment.scale_low);
            c.augment.scale_high = a.value("scale_high", c.augment.scale_high);
            c.augment.crop_height = a.value("crop_height", c.augment.crop_height);
            c.augment.crop_width = a.value("crop_width", c.augment.crop_width);
            c.augment.pad_if_needed = a.value("pad_if_needed", c.augment.pad_if_needed);
        }
        c.device = j.value("device", c.device);
        c.deterministic = j.value("deterministic", c.deterministic);
        c.checkpoint_every = j.value("checkpoint_every", c.checkpoint_every);
        c.validation_fraction = j.value("validation_fraction", c.validation_fraction);
        c.max_steps = j.value("max_steps", c.max_steps);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("train config: ") + e.what());
    }
    c.validate();
    return c;
}

}  // namespace glasseg::trainer
