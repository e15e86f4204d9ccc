#include "glasseg/cli/run_config.hpp"

#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <yaml-cpp/yaml.h>

#include "glasseg/core/errors.hpp"

namespace glasseg::cli {

namespace {

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> parts;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, sep)) parts.push_back(item);
    return parts;
}

class Reader {
public:
    explicit Reader(std::string source) : source_(std::move(source)) {}

    [[noreturn]] void fail(const YAML::Node& node, const std::string& key, const std::string& problem) const {
        std::ostringstream msg;
        msg << source_;
        if (overridden_.contains(key)) msg << " (--set " << key << ')';
        else if (node.IsDefined() && !node.Mark().is_null()) msg << ':' << node.Mark().line + 1;
        msg << ": " << key << ": " << problem;
        throw ConfigError(msg.str());
    }

    template <typename T>
    void read(const YAML::Node& parent, const std::string& name, const std::string& path, T& out) const {
        const auto node = parent[name];
        if (!node.IsDefined() || node.IsNull()) return;
        if (!node.IsScalar()) fail(node, path, "expected a scalar value");
        try {
            out = node.as<T>();
        } catch (const YAML::Exception&) {
            fail(node, path, "cannot parse '" + node.Scalar() + "'");
        }
    }

    template <typename T>
    void read_enum(const YAML::Node& parent, const std::string& name, const std::string& path, T& out,
                   const std::function<T(std::string_view)>& parse) const {
        std::string text;
        read(parent, name, path, text);
        if (text.empty()) return;
        try {
            out = parse(text);
        } catch (const ConfigError& e) {
            fail(parent[name], path, e.what());
        }
    }

    void path(const YAML::Node& parent, const std::string& name, const std::string& key, const fs::path& base,
              std::optional<fs::path>& out) const {
        std::string text;
        read(parent, name, key, text);
        if (text.empty()) return;
        fs::path p(text);
        out = p.is_absolute() || base.empty() ? p : base / p;
    }

    /// Rejects keys not listed in `allowed`.
    void only(const YAML::Node& node, const std::string& prefix, std::initializer_list<const char*> allowed) const {
        if (!node.IsDefined() || node.IsNull()) return;
        if (!node.IsMap()) fail(node, prefix.empty() ? "<root>" : prefix, "expected a mapping");
        for (const auto& item : node) {
            const auto key = item.first.as<std::string>();
            bool known = false;
            for (const char* a : allowed) known = known || key == a;
            if (!known) fail(item.first, prefix.empty() ? key : prefix + "." + key, "unknown key");
        }
    }

    void mark_override(const std::string& key) { overridden_.insert({key, true}); }

    /// Reports a section-level validation failure at the key the message starts with.
    [[noreturn]] void fail_validation(const YAML::Node& section, const std::string& prefix, const std::string& what) const {
        const auto key = what.substr(0, what.find(' '));
        if (key.rfind(prefix + ".", 0) == 0) {
            const auto child = section[key.substr(prefix.size() + 1)];
            if (child.IsDefined()) fail(child, key, what.substr(key.size() + 1));
        }
        fail(section, prefix, what);
    }

private:
    std::string source_;
    std::map<std::string, bool> overridden_;
};

void apply_override(YAML::Node root, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("--set expects key=value, got '" + assignment + "'");
    }
    const auto keys = split(assignment.substr(0, eq), '.');
    YAML::Node value;
    try {
        value = YAML::Load(assignment.substr(eq + 1));
    } catch (const YAML::Exception& e) {
        throw ConfigError("--set " + assignment + ": " + e.what());
    }
    // Walk with fresh handles; YAML::Node assignment would rebind rather than descend.
    std::vector<YAML::Node> chain{root};
    for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
        auto child = chain.back()[keys[i]];
        if (!child.IsDefined() || !child.IsMap()) child = YAML::Node(YAML::NodeType::Map);
        chain.push_back(child);
    }
    chain.back()[keys.back()] = value;
    for (std::size_t i = chain.size() - 1; i > 0; --i) chain[i - 1][keys[i - 1]] = chain[i];
}

}  // namespace

void apply_variant(nnet::ModelConfig& model, const std::string& variant) {
    for (const auto& raw : split(variant, ',')) {
        const auto token = raw;
        if (token.empty()) continue;
        try {
            model.input = nnet::parse_input(token);
            continue;
        } catch (const ConfigError&) {
        }
        try {
            model.fusion = nnet::parse_fusion(token);
            continue;
        } catch (const ConfigError&) {
        }
        try {
            model.decoder = nnet::parse_decoder(token);
            continue;
        } catch (const ConfigError&) {
        }
        try {
            model.backbone = nnet::parse_backbone(token);
            continue;
        } catch (const ConfigError&) {
        }
        throw ConfigError("--variant: '" + token + "' is not an input, fusion, decoder or backbone name");
    }
}

RunConfig parse_run_config(const std::string& yaml_text, const std::string& source_name,
                           const std::vector<std::string>& overrides, const fs::path& base_dir) {
    YAML::Node root;
    try {
        root = YAML::Load(yaml_text);
    } catch (const YAML::ParserException& e) {
        throw ConfigError(source_name + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
    }
    if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
    Reader r(source_name);
    for (const auto& o : overrides) {
        apply_override(root, o);
        r.mark_override(o.substr(0, o.find('=')));
    }

    r.only(root, "", {"command", "seed", "deterministic", "device", "output", "checkpoint", "data", "model", "train",
                      "eval"});
    RunConfig c;
    r.read(root, "command", "command", c.command);
    r.read(root, "seed", "seed", c.seed);
    r.read(root, "deterministic", "deterministic", c.deterministic);
    r.read(root, "device", "device", c.device);
    std::optional<fs::path> out;
    r.path(root, "output", "output", base_dir, out);
    if (out) c.out_dir = *out;
    r.path(root, "checkpoint", "checkpoint", base_dir, c.checkpoint);

    const auto data = root["data"];
    r.only(data, "data", {"manifest", "train_split", "test_split"});
    if (data.IsDefined()) {
        r.path(data, "manifest", "data.manifest", base_dir, c.manifest);
        r.read(data, "train_split", "data.train_split", c.train_split);
        r.read(data, "test_split", "data.test_split", c.test_split);
    }

    const auto model = root["model"];
    r.only(model, "model", {"backbone", "pretrained", "channels", "mfm_iterations", "heads", "ffn_dim", "dropout",
                            "fusion", "decoder", "input"});
    if (model.IsDefined()) {
        auto& m = c.model;
        r.read_enum<nnet::BackboneKind>(model, "backbone", "model.backbone", m.backbone, nnet::parse_backbone);
        r.read(model, "pretrained", "model.pretrained", m.pretrained);
        r.read(model, "channels", "model.channels", m.channels);
        r.read(model, "mfm_iterations", "model.mfm_iterations", m.mfm_iterations);
        r.read(model, "heads", "model.heads", m.heads);
        r.read(model, "ffn_dim", "model.ffn_dim", m.ffn_dim);
        r.read(model, "dropout", "model.dropout", m.dropout);
        r.read_enum<nnet::FusionKind>(model, "fusion", "model.fusion", m.fusion, nnet::parse_fusion);
        r.read_enum<nnet::DecoderKind>(model, "decoder", "model.decoder", m.decoder, nnet::parse_decoder);
        r.read_enum<nnet::InputKind>(model, "input", "model.input", m.input, nnet::parse_input);
        try {
            m.validate();
        } catch (const ConfigError& e) {
            r.fail_validation(model, "model", e.what());
        }
    }

    const auto train = root["train"];
    r.only(train, "train", {"batch_size", "lr_initial", "lr_after", "lr_switch_epoch", "total_epochs", "weight_decay",
                            "grad_clip", "augment_enabled", "augment", "checkpoint_every", "validation_fraction",
                            "max_steps"});
    if (train.IsDefined()) {
        auto& t = c.train;
        r.read(train, "batch_size", "train.batch_size", t.batch_size);
        r.read(train, "lr_initial", "train.lr_initial", t.lr_initial);
        r.read(train, "lr_after", "train.lr_after", t.lr_after);
        r.read(train, "lr_switch_epoch", "train.lr_switch_epoch", t.lr_switch_epoch);
        r.read(train, "total_epochs", "train.total_epochs", t.total_epochs);
        r.read(train, "weight_decay", "train.weight_decay", t.weight_decay);
        r.read(train, "grad_clip", "train.grad_clip", t.grad_clip);
        r.read(train, "augment_enabled", "train.augment_enabled", t.augment_enabled);
        r.read(train, "checkpoint_every", "train.checkpoint_every", t.checkpoint_every);
        r.read(train, "validation_fraction", "train.validation_fraction", t.validation_fraction);
        r.read(train, "max_steps", "train.max_steps", t.max_steps);
        const auto aug = train["augment"];
        r.only(aug, "train.augment", {"flip_probability", "scale_low", "scale_high", "crop_height", "crop_width",
                                      "pad_if_needed"});
        if (aug.IsDefined()) {
            r.read(aug, "flip_probability", "train.augment.flip_probability", t.augment.flip_probability);
            r.read(aug, "scale_low", "train.augment.scale_low", t.augment.scale_low);
            r.read(aug, "scale_high", "train.augment.scale_high", t.augment.scale_high);
            r.read(aug, "crop_height", "train.augment.crop_height", t.augment.crop_height);
            r.read(aug, "crop_width", "train.augment.crop_width", t.augment.crop_width);
            r.read(aug, "pad_if_needed", "train.augment.pad_if_needed", t.augment.pad_if_needed);
        }
        try {
            t.validate();
        } catch (const ConfigError& e) {
            r.fail_validation(train, "train", e.what());
        }
    }

    const auto eval = root["eval"];
    r.only(eval, "eval", {"threshold", "beta2", "fpr_min_area"});
    if (eval.IsDefined()) {
        r.read(eval, "threshold", "eval.threshold", c.eval.threshold);
        r.read(eval, "beta2", "eval.beta2", c.eval.beta2);
        r.read(eval, "fpr_min_area", "eval.fpr_min_area", c.eval.fpr_min_area);
    }

    c.train.seed = c.seed;
    c.train.deterministic = c.deterministic;
    c.train.device = c.device;
    return c;
}

RunConfig load_run_config(const fs::path& path, const std::vector<std::string>& overrides) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config file not found: " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_run_config(buffer.str(), path.string(), overrides, path.parent_path());
}

nlohmann::json to_json(const RunConfig& c) {
    nlohmann::json j{
        {"command", c.command},
        {"seed", c.seed},
        {"deterministic", c.deterministic},
        {"device", c.device},
        {"output", c.out_dir.string()},
        {"data", {{"train_split", c.train_split}, {"test_split", c.test_split}}},
        {"model", nnet::to_json(c.model)},
        {"train", trainer::to_json(c.train)},
        {"eval", {{"threshold", c.eval.threshold}, {"beta2", c.eval.beta2}, {"fpr_min_area", c.eval.fpr_min_area}}},
    };
    j["checkpoint"] = c.checkpoint ? nlohmann::json(c.checkpoint->string()) : nlohmann::json(nullptr);
    j["data"]["manifest"] = c.manifest ? nlohmann::json(c.manifest->string()) : nlohmann::json(nullptr);
    return j;
}

}  // namespace glasseg::cli
