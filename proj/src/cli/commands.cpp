#include "glasseg/cli/commands.hpp"

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include <opencv2/imgcodecs.hpp>

#include "glasseg/apps/depth_io.hpp"
#include "glasseg/apps/plane.hpp"
#include "glasseg/cli/run_config.hpp"
#include "glasseg/core/errors.hpp"
#include "glasseg/datakit/io.hpp"
#include "glasseg/datakit/stats.hpp"
#include "glasseg/datakit/synth.hpp"
#include "glasseg/metrics/report.hpp"
#include "glasseg/nnet/checkpoint.hpp"
#include "glasseg/trainer/evaluate.hpp"
#include "glasseg/trainer/train.hpp"

namespace glasseg::cli {

namespace {

struct CommonFlags {
    std::string config;
    std::vector<std::string> sets;
    std::optional<std::uint64_t> seed;
    bool deterministic = false;
    std::string variant;
    std::string device;
    std::string out;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_config) {
    if (with_config) {
        cmd->add_option("--config", f.config, "YAML run configuration");
        cmd->add_option("--set", f.sets, "Override a config entry, e.g. --set train.batch_size=4");
    }
    cmd->add_option("--seed", f.seed, "Random seed");
    cmd->add_flag("--deterministic", f.deterministic, "Reproducible single-threaded kernels");
    cmd->add_option("--variant", f.variant, "Comma-separated input/fusion/decoder/backbone names");
    cmd->add_option("--device", f.device, "Torch device (cpu, cuda, cuda:1, ...)");
    cmd->add_option("--out", f.out, "Output directory");
}

RunConfig resolve(const CommonFlags& f) {
    RunConfig c = f.config.empty() ? parse_run_config("", "<defaults>", f.sets) : load_run_config(f.config, f.sets);
    if (f.seed) c.seed = *f.seed;
    if (f.deterministic) c.deterministic = true;
    if (!f.device.empty()) c.device = f.device;
    if (!f.out.empty()) c.out_dir = f.out;
    if (!f.variant.empty()) apply_variant(c.model, f.variant);
    c.train.seed = c.seed;
    c.train.deterministic = c.deterministic;
    c.train.device = c.device;
    return c;
}

torch::Device device_of(const std::string& name) {
    try {
        return torch::Device(name);
    } catch (const c10::Error&) {
        throw ConfigError("device '" + name + "' is not a valid torch device");
    }
}

fs::path require_manifest(const RunConfig& c) {
    if (!c.manifest) throw ConfigError("data.manifest is required (set it in the config or pass --manifest)");
    if (!fs::exists(*c.manifest)) throw ConfigError("data.manifest: file not found: " + c.manifest->string());
    return *c.manifest;
}

void write_json(const fs::path& path, const nlohmann::json& j) {
    std::ofstream o(path);
    if (!o) throw std::runtime_error("cannot write " + path.string());
    o << j.dump(2) << '\n';
}

std::string variant_name(const nnet::ModelConfig& m) {
    return std::string(nnet::to_string(m.input)) + "/" + std::string(nnet::to_string(m.fusion)) + "/" +
           std::string(nnet::to_string(m.decoder)) + "/" + std::string(nnet::to_string(m.backbone));
}

int cmd_train(const CommonFlags& f, const std::string& resume, std::ostream& out) {
    if (f.config.empty()) throw ConfigError("train: --config is required");
    RunConfig c = resolve(f);
    c.command = "train";
    const auto manifest = require_manifest(c);
    const auto train_set = datakit::load_split(manifest, c.train_split);
    if (train_set.empty()) {
        throw ConfigError("data.train_split: split '" + c.train_split + "' selects no samples in " + manifest.string());
    }
    fs::create_directories(c.out_dir);
    write_json(c.out_dir / "config.json", to_json(c));

    trainer::TrainOptions options;
    options.out_dir = c.out_dir;
    if (!resume.empty()) options.resume_from = resume;
    int last_epoch = -1;
    double epoch_loss = 0.0;
    int epoch_steps = 0;
    options.on_step = [&](const trainer::StepRecord& r) {
        if (r.epoch != last_epoch && epoch_steps > 0) {
            out << "epoch " << last_epoch << "  loss " << epoch_loss / epoch_steps << '\n';
            epoch_loss = 0.0;
            epoch_steps = 0;
        }
        last_epoch = r.epoch;
        epoch_loss += r.loss;
        ++epoch_steps;
    };
    auto result = trainer::train(c.model, c.train, train_set, options);
    if (epoch_steps > 0) out << "epoch " << last_epoch << "  loss " << epoch_loss / epoch_steps << '\n';

    auto eval_set = datakit::load_split(manifest, c.test_split);
    std::string split = c.test_split;
    if (eval_set.empty()) {
        eval_set = train_set;
        split = c.train_split;
    }
    const auto report = trainer::evaluate(trainer::model_predictor(result.model, device_of(c.device)), eval_set, c.eval);
    const auto name = variant_name(c.model);
    metrics::write_report(report, name, c.out_dir);
    out << "evaluated on split '" << split << "'\n" << metrics::render_table({{name, report}});
    if (result.last_checkpoint) out << "checkpoint: " << result.last_checkpoint->string() << '\n';
    return kExitOk;
}

int cmd_eval(const CommonFlags& f, std::string checkpoint, std::string manifest, std::string split,
             std::string name, std::ostream& out) {
    RunConfig c = resolve(f);
    if (!checkpoint.empty()) c.checkpoint = checkpoint;
    if (!manifest.empty()) c.manifest = manifest;
    if (!c.checkpoint) throw ConfigError("checkpoint is required (--checkpoint)");
    if (!fs::exists(*c.checkpoint)) throw ConfigError("checkpoint: file not found: " + c.checkpoint->string());
    if (split.empty()) split = c.test_split;
    const auto samples = datakit::load_split(require_manifest(c), split);
    if (samples.empty()) throw ConfigError("split '" + split + "' selects no samples");
    const auto report = trainer::evaluate_checkpoint(*c.checkpoint, samples, c.eval, device_of(c.device));
    if (name.empty()) name = c.checkpoint->stem().string();
    fs::create_directories(c.out_dir);
    metrics::write_report(report, name, c.out_dir);
    out << metrics::render_table({{name, report}});
    return kExitOk;
}

int cmd_predict(const std::string& checkpoint, const std::string& rgb, const std::string& thermal,
                const CommonFlags& f, std::ostream& out) {
    if (rgb.empty() && thermal.empty()) throw ConfigError("predict: give --rgb and/or --thermal");
    auto model = nnet::load_model(checkpoint);
    const auto device = device_of(f.device.empty() ? "cpu" : f.device);
    model->to(device);
    model->eval();

    datakit::RgbtSample sample;
    std::optional<cv::Size> size;
    if (!rgb.empty()) {
        sample.rgb = datakit::load_rgb(rgb);
        size = sample.rgb.size();
    }
    if (!thermal.empty()) sample.thermal = datakit::load_thermal(thermal, size);
    const auto prob = trainer::predict(model, sample, device);

    const fs::path dir = f.out.empty() ? fs::path(".") : fs::path(f.out);
    fs::create_directories(dir);
    const auto stem = fs::path(rgb.empty() ? thermal : rgb).stem().string();
    cv::Mat1b prob8;
    prob.convertTo(prob8, CV_8U, 255.0);
    const auto prob_path = dir / (stem + "_prob.png");
    const auto mask_path = dir / (stem + "_mask.png");
    if (!cv::imwrite(prob_path.string(), prob8)) throw std::runtime_error("cannot write " + prob_path.string());
    datakit::save_mask(metrics::binarize(prob), mask_path);
    out << "wrote " << prob_path.string() << " and " << mask_path.string() << '\n';
    return kExitOk;
}

int cmd_stats(const std::string& manifest, const std::string& split, const std::string& out_dir, int bins, int size,
              std::ostream& out) {
    if (!fs::exists(manifest)) throw ConfigError("--manifest: file not found: " + manifest);
    std::vector<BinaryMask> masks;
    for (const auto& e : datakit::read_manifest(manifest)) {
        if (!split.empty() && e.split != split) continue;
        if (e.mask) masks.push_back(datakit::load_mask(*e.mask));
    }
    if (masks.empty()) throw InputError("stats: the manifest lists no masks" + (split.empty() ? "" : " in split " + split));
    const auto stats = datakit::dataset_stats(masks, datakit::StatsOptions{bins, size});
    datakit::write_stats(stats, out_dir);
    out << "images: " << stats.n_images << '\n' << "components:";
    for (const auto& [k, n] : stats.component_histogram) out << ' ' << k << ':' << n;
    out << "\nwrote " << (fs::path(out_dir) / "stats.json").string() << '\n';
    return kExitOk;
}

struct SynthFlags {
    int count = 64;
    int width = 64;
    int height = 64;
    int max_regions = 3;
    int scenes = 8;
    double test_fraction = 0.25;
};

int cmd_synth(const SynthFlags& s, const CommonFlags& f, std::ostream& out) {
    if (f.out.empty()) throw ConfigError("synth: --out is required");
    if (s.count < 1 || s.width < 4 || s.height < 4 || s.max_regions < 0 || s.scenes < 1 || s.test_fraction < 0.0 ||
        s.test_fraction >= 1.0) {
        throw ConfigError("synth: invalid size, count, region or split settings");
    }
    const fs::path dir = f.out;
    for (const char* sub : {"rgb", "thermal", "mask"}) fs::create_directories(dir / sub);
    const std::uint64_t seed = f.seed.value_or(0);
    const int n_test = static_cast<int>(std::lround(s.test_fraction * s.count));
    std::vector<datakit::ManifestEntry> entries;
    for (int i = 0; i < s.count; ++i) {
        const int regions = s.max_regions == 0 ? 0 : 1 + i % s.max_regions;
        const auto sample = datakit::synth_scene(seed * 1000003ULL + static_cast<std::uint64_t>(i),
                                                 cv::Size(s.width, s.height), regions);
        char name[16];
        std::snprintf(name, sizeof(name), "%05d", i);
        datakit::ManifestEntry e;
        e.rgb = dir / "rgb" / (std::string(name) + ".png");
        e.thermal = dir / "thermal" / (std::string(name) + ".tiff");
        e.mask = dir / "mask" / (std::string(name) + ".png");
        e.scene = "scene" + std::to_string(i % s.scenes);
        e.split = i >= s.count - n_test ? "test" : "train";
        datakit::save_pair(sample, e.rgb, e.thermal, e.mask);
        entries.push_back(std::move(e));
    }
    datakit::write_manifest(dir / "manifest.csv", entries);
    out << "wrote " << s.count << " pairs and " << (dir / "manifest.csv").string() << '\n';
    return kExitOk;
}

struct DepthFlags {
    std::string depth;
    std::string mask;
    std::string output;
    std::string ply;
    apps::CameraIntrinsics k;
};

int cmd_correct_depth(const DepthFlags& d, std::ostream& out) {
    try {
        d.k.validate();
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    }
    const auto depth = apps::load_depth(d.depth);
    const auto mask = datakit::load_mask(d.mask);
    const auto result = apps::correct_depth(depth, mask, d.k);
    apps::save_depth(result.depth, d.output);
    if (!d.ply.empty()) apps::export_ply(result.depth, d.k, d.ply);
    nlohmann::json report = nlohmann::json::array();
    for (const auto& c : result.components) {
        nlohmann::json j{{"label", c.label}, {"pixels", c.pixel_count}, {"corrected", c.corrected}};
        if (c.plane) {
            j["normal"] = {c.plane->normal.x(), c.plane->normal.y(), c.plane->normal.z()};
            j["offset"] = c.plane->offset;
            j["inliers"] = c.plane->inlier_count;
            j["residual_rms"] = c.plane->residual_rms;
        } else {
            j["error"] = c.error;
        }
        out << "component " << c.label << ": " << (c.corrected ? "corrected" : "left unchanged (" + c.error + ")")
            << '\n';
        report.push_back(j);
    }
    write_json(fs::path(d.output).replace_extension(".json"), {{"components", report}});
    return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"RGB-thermal glass segmentation toolkit"};
    app.name("glasseg");
    app.require_subcommand(1);

    CommonFlags train_flags;
    std::string resume;
    auto* train = app.add_subcommand("train", "Train a model from a YAML config");
    add_common(train, train_flags, true);
    train->add_option("--resume", resume, "Continue from a training checkpoint");

    CommonFlags eval_flags;
    std::string eval_checkpoint, eval_manifest, eval_split, eval_name;
    auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest split");
    add_common(eval, eval_flags, true);
    eval->add_option("--checkpoint", eval_checkpoint, "Model checkpoint");
    eval->add_option("--manifest", eval_manifest, "Dataset manifest");
    eval->add_option("--split", eval_split, "Split to evaluate (default: data.test_split)");
    eval->add_option("--name", eval_name, "Row name in the report");

    CommonFlags predict_flags;
    std::string predict_checkpoint, predict_rgb, predict_thermal;
    auto* predict = app.add_subcommand("predict", "Segment one image pair");
    add_common(predict, predict_flags, false);
    predict->add_option("--checkpoint", predict_checkpoint, "Model checkpoint")->required();
    predict->add_option("--rgb", predict_rgb, "RGB image");
    predict->add_option("--thermal", predict_thermal, "Thermal image");

    std::string stats_manifest, stats_split, stats_out = "stats";
    int stats_bins = 10, stats_size = 64;
    auto* stats = app.add_subcommand("stats", "Dataset statistics and plots");
    stats->add_option("--manifest", stats_manifest, "Dataset manifest")->required();
    stats->add_option("--split", stats_split, "Restrict to one split");
    stats->add_option("--out", stats_out, "Output directory");
    stats->add_option("--bins", stats_bins, "Area-ratio histogram bins")->check(CLI::PositiveNumber);
    stats->add_option("--size", stats_size, "Location map resolution")->check(CLI::PositiveNumber);

    CommonFlags synth_flags;
    SynthFlags synth_opts;
    auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset with a manifest");
    add_common(synth, synth_flags, false);
    synth->add_option("--count", synth_opts.count, "Number of pairs");
    synth->add_option("--width", synth_opts.width, "Image width");
    synth->add_option("--height", synth_opts.height, "Image height");
    synth->add_option("--max-regions", synth_opts.max_regions, "Glass regions cycle through 1..N (0: no glass)");
    synth->add_option("--scenes", synth_opts.scenes, "Number of scene tags");
    synth->add_option("--test-fraction", synth_opts.test_fraction, "Fraction of pairs in the test split");

    DepthFlags depth_opts;
    auto* depth = app.add_subcommand("correct-depth", "Replace glass depths by fitted planes");
    depth->add_option("--depth", depth_opts.depth, "Depth map (16-bit PNG in mm or float TIFF in m)")->required();
    depth->add_option("--mask", depth_opts.mask, "Glass mask")->required();
    depth->add_option("--out", depth_opts.output, "Corrected depth map (.png or .tiff)")->required();
    depth->add_option("--ply", depth_opts.ply, "Also export the corrected point cloud");
    depth->add_option("--fx", depth_opts.k.fx, "Focal length x (pixels)")->required();
    depth->add_option("--fy", depth_opts.k.fy, "Focal length y (pixels)")->required();
    depth->add_option("--cx", depth_opts.k.cx, "Principal point x (pixels)")->required();
    depth->add_option("--cy", depth_opts.k.cy, "Principal point y (pixels)")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitConfigError;
    }

    try {
        if (*train) return cmd_train(train_flags, resume, out);
        if (*eval) return cmd_eval(eval_flags, eval_checkpoint, eval_manifest, eval_split, eval_name, out);
        if (*predict) return cmd_predict(predict_checkpoint, predict_rgb, predict_thermal, predict_flags, out);
        if (*stats) return cmd_stats(stats_manifest, stats_split, stats_out, stats_bins, stats_size, out);
        if (*synth) return cmd_synth(synth_opts, synth_flags, out);
        if (*depth) return cmd_correct_depth(depth_opts, out);
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return kExitConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kExitFailure;
    }
    return kExitConfigError;
}

int run(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, std::cout, std::cerr);
}

}  // namespace glasseg::cli
