#pragma once

#include <filesystem>

#include <torch/torch.h>

#include "glasseg/nnet/model.hpp"

namespace glasseg::nnet {

inline constexpr std::int64_t kModelFormatVersion = 1;

/// Writes every parameter and buffer under its hierarchical name (encoder_rgb.stage1...,
/// mfm.iter1.trans_rt..., decoder.block1..., head...), plus "format_version" and
/// "model_config" (JSON text).
void write_model(torch::serialize::OutputArchive& archive, const GlassSegNet& model);

/// Rebuilds a model from an archive written by write_model. Throws InputError on a missing
/// key, a shape mismatch or an unsupported format version.
GlassSegNet read_model(torch::serialize::InputArchive& archive);

/// Copies the archived tensors into an existing model of the same configuration.
void read_model_state(torch::serialize::InputArchive& archive, GlassSegNet& model);

ModelConfig read_model_config(torch::serialize::InputArchive& archive);

void save_model(const GlassSegNet& model, const std::filesystem::path& path);
GlassSegNet load_model(const std::filesystem::path& path);

}  // namespace glasseg::nnet
