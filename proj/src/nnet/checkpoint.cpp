#include "glasseg/nnet/checkpoint.hpp"

#include "glasseg/core/errors.hpp"

namespace glasseg::nnet {

void write_model(torch::serialize::OutputArchive& archive, const GlassSegNet& model) {
    for (const auto& item : model->named_parameters()) archive.write(item.key(), item.value().detach());
    for (const auto& item : model->named_buffers()) archive.write(item.key(), item.value(), /*is_buffer=*/true);
    archive.write("format_version", c10::IValue(kModelFormatVersion));
    archive.write("model_config", c10::IValue(to_json(model->config()).dump()));
}

ModelConfig read_model_config(torch::serialize::InputArchive& archive) {
    c10::IValue version;
    if (!archive.try_read("format_version", version) || !version.isInt()) {
        throw InputError("checkpoint lacks a format_version entry");
    }
    if (version.toInt() != kModelFormatVersion) {
        throw InputError("unsupported checkpoint format version " + std::to_string(version.toInt()));
    }
    c10::IValue text;
    if (!archive.try_read("model_config", text) || !text.isString()) {
        throw InputError("checkpoint lacks a model_config entry");
    }
    try {
        return model_config_from_json(nlohmann::json::parse(text.toStringRef()));
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("checkpoint model_config is malformed: ") + e.what());
    }
}

void read_model_state(torch::serialize::InputArchive& archive, GlassSegNet& model) {
    torch::NoGradGuard guard;
    auto load = [&](const std::string& key, torch::Tensor& target, bool is_buffer) {
        torch::Tensor stored;
        if (!archive.try_read(key, stored, is_buffer)) throw InputError("checkpoint lacks tensor '" + key + "'");
        if (stored.sizes() != target.sizes()) {
            throw InputError("checkpoint tensor '" + key + "' has mismatched shape");
        }
        target.copy_(stored);
    };
    for (auto& item : model->named_parameters()) load(item.key(), item.value(), false);
    for (auto& item : model->named_buffers()) load(item.key(), item.value(), true);
}

GlassSegNet read_model(torch::serialize::InputArchive& archive) {
    GlassSegNet model(read_model_config(archive), /*fetch_pretrained=*/false);
    read_model_state(archive, model);
    return model;
}

void save_model(const GlassSegNet& model, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    torch::serialize::OutputArchive archive;
    write_model(archive, model);
    archive.save_to(path.string());
}

GlassSegNet load_model(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw InputError("checkpoint not found: " + path.string());
    torch::serialize::InputArchive archive;
    try {
        archive.load_from(path.string());
    } catch (const c10::Error& e) {
        throw InputError("cannot read checkpoint " + path.string() + ": " + e.what_without_backtrace());
    }
    return read_model(archive);
}

}  // namespace glasseg::nnet
