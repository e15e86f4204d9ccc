#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "glasseg/metrics/metrics.hpp"
#include "glasseg/nnet/config.hpp"
#include "glasseg/trainer/config.hpp"

namespace glasseg::cli {

namespace fs = std::filesystem;

/// Resolved settings of one invocation. Loaded from YAML:
///
///   seed: 0
///   deterministic: false
///   device: cpu
///   output: runs/exp1
///   checkpoint: runs/exp1/last.pt      # eval / predict
///   data: {manifest: data/manifest.csv, train_split: train, test_split: test}
///   model: {backbone: residual-50, channels: 256, fusion: MFM, decoder: weighted, input: rgbt, ...}
///   train: {batch_size: 16, total_epochs: 300, lr_initial: 1e-4, augment: {crop_height: 384, ...}, ...}
///   eval: {threshold: 0.5, beta2: 0.3, fpr_min_area: 0.0}
///
/// Relative paths resolve against the config file's directory.
struct RunConfig {
    std::string command;
    std::optional<fs::path> manifest;
    std::string train_split = "train";
    std::string test_split = "test";
    std::optional<fs::path> checkpoint;
    fs::path out_dir = "glasseg_out";
    nnet::ModelConfig model;
    trainer::TrainConfig train;
    metrics::EvalOptions eval;
    std::uint64_t seed = 0;
    bool deterministic = false;
    std::string device = "cpu";
};

/// Parses a YAML document. `overrides` are `dotted.key=value` strings applied on top before
/// validation. Errors are ConfigErrors of the form "<source>:<line>: <key>: <problem>".
RunConfig parse_run_config(const std::string& yaml_text, const std::string& source_name,
                           const std::vector<std::string>& overrides = {}, const fs::path& base_dir = {});

RunConfig load_run_config(const fs::path& path, const std::vector<std::string>& overrides = {});

/// Applies a `--variant` list: comma-separated input, fusion, decoder or backbone names.
void apply_variant(nnet::ModelConfig& model, const std::string& variant);

nlohmann::json to_json(const RunConfig& config);

}  // namespace glasseg::cli
