#include "glasseg/trainer/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>

#include <ATen/CPUGeneratorImpl.h>

#include "glasseg/core/errors.hpp"
#include "glasseg/datakit/augment.hpp"
#include "glasseg/nnet/checkpoint.hpp"
#include "glasseg/trainer/batching.hpp"
#include "glasseg/trainer/evaluate.hpp"
#include "glasseg/trainer/loss.hpp"

namespace glasseg::trainer {

namespace fs = std::filesystem;

nlohmann::json to_json(const TrainHistory& h) {
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& s : h.steps) steps.push_back({{"step", s.step}, {"epoch", s.epoch}, {"loss", s.loss}, {"lr", s.lr}});
    nlohmann::json epochs = nlohmann::json::array();
    for (const auto& e : h.epochs) {
        epochs.push_back({{"epoch", e.epoch},
                          {"mean_loss", e.mean_loss},
                          {"lr", e.lr},
                          {"val_iou", e.val_iou ? nlohmann::json(*e.val_iou) : nlohmann::json(nullptr)}});
    }
    return {{"steps", steps}, {"epochs", epochs}, {"best_epoch", h.best_epoch}, {"best_score", h.best_score}};
}

TrainHistory history_from_json(const nlohmann::json& j) {
    TrainHistory h;
    for (const auto& s : j.at("steps")) {
        h.steps.push_back({s.at("step").get<std::int64_t>(), s.at("epoch").get<int>(), s.at("loss").get<double>(),
                           s.at("lr").get<double>()});
    }
    for (const auto& e : j.at("epochs")) {
        EpochRecord r{e.at("epoch").get<int>(), e.at("mean_loss").get<double>(), e.at("lr").get<double>(), {}};
        if (!e.at("val_iou").is_null()) r.val_iou = e.at("val_iou").get<double>();
        h.epochs.push_back(r);
    }
    h.best_epoch = j.at("best_epoch").get<int>();
    h.best_score = j.at("best_score").get<double>();
    return h;
}

void enable_determinism() {
    at::set_num_threads(1);
    at::globalContext().setDeterministicAlgorithms(true, false);
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_by_scene(
    const std::vector<datakit::RgbtSample>& samples, double validation_fraction, std::uint64_t seed) {
    std::vector<std::string> scenes;
    for (const auto& s : samples) {
        if (std::find(scenes.begin(), scenes.end(), s.meta.scene) == scenes.end()) scenes.push_back(s.meta.scene);
    }
    std::sort(scenes.begin(), scenes.end());
    const auto n_val = static_cast<std::size_t>(std::lround(validation_fraction * static_cast<double>(scenes.size())));
    std::set<std::string> held_out;
    if (n_val > 0 && n_val < scenes.size()) {
        const auto order = epoch_order(scenes.size(), seed, -1);
        for (std::size_t i = 0; i < n_val; ++i) held_out.insert(scenes[order[i]]);
    }
    std::vector<std::size_t> train_idx, val_idx;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        (held_out.contains(samples[i].meta.scene) ? val_idx : train_idx).push_back(i);
    }
    return {train_idx, val_idx};
}

namespace {

struct ResumeState {
    int next_epoch = 0;
    std::int64_t step = 0;
    TrainHistory history;
};

torch::Device parse_device(const std::string& name) {
    try {
        torch::Device device(name);
        if (device.is_cuda() && !torch::cuda::is_available()) {
            throw ConfigError("train.device '" + name + "' requested but CUDA is not available");
        }
        return device;
    } catch (const c10::Error&) {
        throw ConfigError("train.device '" + name + "' is not a valid device");
    }
}

void set_lr(torch::optim::AdamW& optimizer, double lr) {
    for (auto& group : optimizer.param_groups()) {
        static_cast<torch::optim::AdamWOptions&>(group.options()).lr(lr);
    }
}

torch::Tensor rng_state() { return at::detail::getDefaultCPUGenerator().get_state(); }

void set_rng_state(const torch::Tensor& state) {
    auto generator = at::detail::getDefaultCPUGenerator();
    std::lock_guard<std::mutex> lock(generator.mutex());
    generator.set_state(state);
}

ResumeState load_training_state(const fs::path& path, nnet::GlassSegNet& model, torch::optim::AdamW& optimizer) {
    torch::serialize::InputArchive archive;
    archive.load_from(path.string());
    const auto config = nnet::read_model_config(archive);
    if (!(config == model->config())) throw ConfigError("resume checkpoint was trained with a different model config");
    nnet::read_model_state(archive, model);

    torch::serialize::InputArchive opt_archive;
    if (!archive.try_read("optimizer", opt_archive)) throw InputError("checkpoint has no optimizer state");
    optimizer.load(opt_archive);

    torch::Tensor rng;
    if (archive.try_read("rng_state", rng)) set_rng_state(rng);

    c10::IValue state;
    if (!archive.try_read("train_state", state) || !state.isString()) {
        throw InputError("checkpoint has no training state: " + path.string());
    }
    const auto j = nlohmann::json::parse(state.toStringRef());
    return ResumeState{j.at("next_epoch").get<int>(), j.at("step").get<std::int64_t>(),
                       history_from_json(j.at("history"))};
}

std::string diverged_message(const StepRecord& rec, const std::vector<std::string>& batch_ids,
                             const TrainHistory& history) {
    std::ostringstream msg;
    msg << "non-finite loss at step " << rec.step << " (epoch " << rec.epoch << ", lr " << rec.lr << "); batch:";
    for (const auto& id : batch_ids) msg << ' ' << id;
    msg << "; recent losses:";
    const auto n = history.steps.size();
    for (std::size_t i = n > 10 ? n - 10 : 0; i < n; ++i) msg << ' ' << history.steps[i].loss;
    return msg.str();
}

}  // namespace

void save_training_checkpoint(const fs::path& path, const nnet::GlassSegNet& model, torch::optim::AdamW& optimizer,
                              const TrainConfig& cfg, int next_epoch, std::int64_t step,
                              const TrainHistory& history) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    torch::serialize::OutputArchive archive;
    nnet::write_model(archive, model);
    torch::serialize::OutputArchive opt_archive;
    optimizer.save(opt_archive);
    archive.write("optimizer", opt_archive);
    archive.write("rng_state", rng_state());
    const nlohmann::json state{
        {"next_epoch", next_epoch}, {"step", step}, {"train_config", to_json(cfg)}, {"history", to_json(history)}};
    archive.write("train_state", c10::IValue(state.dump()));
    archive.save_to(path.string());
}

TrainResult train(const nnet::ModelConfig& model_cfg, const TrainConfig& cfg,
                  const std::vector<datakit::RgbtSample>& dataset, const TrainOptions& options) {
    cfg.validate();
    model_cfg.validate();
    if (dataset.empty()) throw InputError("train: dataset is empty");
    const auto device = parse_device(cfg.device);
    if (cfg.deterministic) enable_determinism();

    torch::manual_seed(cfg.seed);
    nnet::GlassSegNet model(model_cfg);
    model->to(device);
    torch::optim::AdamW optimizer(model->parameters(),
                                  torch::optim::AdamWOptions(cfg.lr_initial).weight_decay(cfg.weight_decay));

    ResumeState state;
    if (options.resume_from) state = load_training_state(*options.resume_from, model, optimizer);
    TrainHistory& history = state.history;

    const auto [train_idx, val_idx] = split_by_scene(dataset, cfg.validation_fraction, cfg.seed);
    if (train_idx.empty()) throw InputError("train: no training samples left after the validation split");
    std::vector<datakit::RgbtSample> validation;
    for (auto i : val_idx) validation.push_back(dataset[i]);

    std::ofstream log;
    if (!options.out_dir.empty()) {
        fs::create_directories(options.out_dir);
        log.open(options.out_dir / "train_log.jsonl", options.resume_from ? std::ios::app : std::ios::trunc);
    }

    TrainResult result;
    std::int64_t step = state.step;
    bool stop = cfg.max_steps > 0 && step >= cfg.max_steps;
    int epoch = state.next_epoch;
    for (; epoch < cfg.total_epochs && !stop; ++epoch) {
        model->train();
        const double lr = lr_schedule(epoch, cfg);
        set_lr(optimizer, lr);
        const auto order = epoch_order(train_idx.size(), cfg.seed, epoch);
        double loss_sum = 0.0;
        int loss_count = 0;

        for (std::size_t begin = 0; begin < order.size() && !stop; begin += cfg.batch_size) {
            const auto end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
            std::vector<datakit::RgbtSample> batch_samples;
            std::vector<std::size_t> indices;
            std::vector<std::string> ids;
            for (auto k = begin; k < end; ++k) {
                const auto idx = train_idx[order[k]];
                indices.push_back(idx);
                ids.push_back(dataset[idx].meta.source);
                if (cfg.augment_enabled) {
                    auto aug = cfg.augment;
                    aug.rng_seed = sample_seed(cfg.seed, epoch, idx);
                    batch_samples.push_back(datakit::augment(dataset[idx], aug));
                } else {
                    batch_samples.push_back(dataset[idx]);
                }
            }
            const auto batch = collate(batch_samples, indices);
            const auto rgb = batch.rgb.to(device);
            const auto thermal = batch.thermal.to(device);
            const auto gt = batch.mask.to(device);

            optimizer.zero_grad();
            const auto out = model(nnet::make_input(model_cfg.input, rgb, thermal));
            const auto loss = bce_loss_with_logits(out.logits, gt);
            const StepRecord rec{step, epoch, loss.item<double>(), lr};
            if (!std::isfinite(rec.loss)) throw TrainingDiverged(diverged_message(rec, ids, history));
            loss.backward();
            if (cfg.grad_clip > 0.0) torch::nn::utils::clip_grad_norm_(model->parameters(), cfg.grad_clip);
            optimizer.step();

            history.steps.push_back(rec);
            loss_sum += rec.loss;
            ++loss_count;
            if (log.is_open()) {
                log << nlohmann::json{{"step", rec.step}, {"epoch", rec.epoch}, {"loss", rec.loss}, {"lr", rec.lr}}.dump()
                    << '\n';
            }
            if (options.on_step) options.on_step(rec);
            ++step;
            if (cfg.max_steps > 0 && step >= cfg.max_steps) stop = true;
        }

        EpochRecord er{epoch, loss_count ? loss_sum / loss_count : 0.0, lr, {}};
        bool improved = false;
        if (!validation.empty()) {
            const auto report = evaluate(model_predictor(model, device), validation);
            er.val_iou = report.with_glass ? report.with_glass->iou : report.without_glass->iou_star;
            improved = history.best_epoch < 0 || *er.val_iou > history.best_score;
            if (improved) history.best_score = *er.val_iou;
        } else {
            improved = history.best_epoch < 0 || er.mean_loss < history.best_score;
            if (improved) history.best_score = er.mean_loss;
        }
        if (improved) history.best_epoch = epoch;
        history.epochs.push_back(er);

        if (!options.out_dir.empty()) {
            const auto last = options.out_dir / "last.pt";
            save_training_checkpoint(last, model, optimizer, cfg, epoch + 1, step, history);
            result.last_checkpoint = last;
            if (improved) {
                fs::copy_file(last, options.out_dir / "best.pt", fs::copy_options::overwrite_existing);
                result.best_checkpoint = options.out_dir / "best.pt";
            }
            if (cfg.checkpoint_every > 0 && (epoch + 1) % cfg.checkpoint_every == 0) {
                char name[32];
                std::snprintf(name, sizeof(name), "epoch_%04d.pt", epoch + 1);
                fs::copy_file(last, options.out_dir / name, fs::copy_options::overwrite_existing);
            }
        }
    }

    if (!options.out_dir.empty() && !result.last_checkpoint) {
        // Nothing left to train (resumed at the end); still leave a loadable checkpoint behind.
        const auto last = options.out_dir / "last.pt";
        save_training_checkpoint(last, model, optimizer, cfg, epoch, step, history);
        result.last_checkpoint = last;
    }
    if (!options.out_dir.empty() && !result.best_checkpoint && fs::exists(options.out_dir / "best.pt")) {
        result.best_checkpoint = options.out_dir / "best.pt";
    }
    model->eval();
    result.model = model;
    result.history = std::move(history);
    return result;
}

}  // namespace glasseg::trainer
