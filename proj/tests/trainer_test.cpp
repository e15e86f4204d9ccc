#include <cmath>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>
#include <torch/torch.h>

#include "glasseg/datakit/synth.hpp"
#include "glasseg/nnet/checkpoint.hpp"
#include "glasseg/trainer/ablation.hpp"
#include "glasseg/trainer/batching.hpp"
#include "glasseg/trainer/evaluate.hpp"
#include "glasseg/trainer/loss.hpp"
#include "glasseg/trainer/train.hpp"

using namespace glasseg;
using namespace glasseg::trainer;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("glasseg_trainer_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::vector<datakit::RgbtSample> synth_set(int n, int side, std::uint64_t seed0, int scenes = 1) {
    std::vector<datakit::RgbtSample> out;
    for (int i = 0; i < n; ++i) {
        auto s = datakit::synth_scene(seed0 + static_cast<std::uint64_t>(i), {side, side}, 1 + i % 2);
        s.meta.scene = "scene" + std::to_string(i % scenes);
        out.push_back(std::move(s));
    }
    return out;
}

nnet::ModelConfig tiny() {
    auto m = nnet::ModelConfig::tiny_test();
    m.dropout = 0.0;
    return m;
}

TrainConfig quick_config(int epochs, int batch) {
    TrainConfig cfg;
    cfg.batch_size = batch;
    cfg.total_epochs = epochs;
    cfg.lr_switch_epoch = epochs - 1;
    cfg.lr_initial = 5e-3;
    cfg.lr_after = 1e-3;
    cfg.augment_enabled = false;
    cfg.validation_fraction = 0.0;
    cfg.checkpoint_every = 0;
    cfg.deterministic = true;
    cfg.seed = 1;
    return cfg;
}

std::vector<double> losses(const TrainHistory& h) {
    std::vector<double> out;
    for (const auto& s : h.steps) out.push_back(s.loss);
    return out;
}

}  // namespace

TEST(Loss, Examples) {
    const auto half = torch::full({1, 1, 4, 4}, 0.5);
    const auto gt = (torch::arange(16) % 2).reshape({1, 1, 4, 4}).to(torch::kFloat);
    EXPECT_NEAR(bce_loss(half, gt).item<double>(), std::log(2.0), 1e-6);

    const auto p = torch::tensor({0.9, 0.1}, torch::kDouble);
    const auto g = torch::tensor({1.0, 0.0}, torch::kDouble);
    EXPECT_NEAR(bce_loss(p, g).item<double>(), -0.5 * (std::log(0.9) + std::log(0.9)), 1e-12);

    EXPECT_LT(bce_loss(g.clone(), g).item<double>(), 1e-10);
    EXPECT_NEAR(bce_loss_with_logits(torch::zeros({3}), torch::ones({3})).item<double>(), std::log(2.0), 1e-6);
}

TEST(Loss, StableAtExtremeLogits) {
    const auto logits = torch::tensor({-200.0, 200.0}, torch::kDouble);
    const auto gt = torch::tensor({0.0, 1.0}, torch::kDouble);
    const double l = bce_loss_with_logits(logits, gt).item<double>();
    EXPECT_TRUE(std::isfinite(l));
    EXPECT_LT(l, 1e-12);
}

TEST(Loss, GradientMatchesClosedFormAndFiniteDifferences) {
    torch::manual_seed(0);
    const auto logits = (torch::randn({2, 1, 3, 5}, torch::kDouble) * 3.0).requires_grad_();
    const auto gt = (torch::rand({2, 1, 3, 5}, torch::kDouble) > 0.5).to(torch::kDouble);
    bce_loss_with_logits(logits, gt).backward();
    const auto grad = logits.grad();
    const auto expected = (torch::sigmoid(logits.detach()) - gt) / static_cast<double>(logits.numel());
    EXPECT_LE((grad - expected).abs().max().item<double>(), 1e-15);

    const double h = 1e-6;
    auto flat = logits.detach().flatten();
    for (int64_t i = 0; i < flat.numel(); ++i) {
        auto plus = flat.clone(), minus = flat.clone();
        plus[i] += h;
        minus[i] -= h;
        const double fd = (bce_loss_with_logits(plus.view_as(gt), gt).item<double>() -
                           bce_loss_with_logits(minus.view_as(gt), gt).item<double>()) /
                          (2.0 * h);
        const double an = grad.flatten()[i].item<double>();
        EXPECT_LE(std::fabs(fd - an) / std::max(std::fabs(an), 1e-12), 1e-4) << i;
    }
}

TEST(Schedule, StepFunction) {
    const TrainConfig cfg;
    EXPECT_EQ(lr_schedule(0, cfg), 1e-4);
    EXPECT_EQ(lr_schedule(199, cfg), 1e-4);
    EXPECT_EQ(lr_schedule(200, cfg), 1e-5);
    EXPECT_EQ(lr_schedule(299, cfg), 1e-5);
    EXPECT_EQ(lr_schedule(200, cfg), lr_schedule(200, cfg));
}

TEST(Config, ValidationAndJson) {
    TrainConfig cfg;
    cfg.validate();
    auto bad = cfg;
    bad.lr_switch_epoch = 300;
    EXPECT_THROW(bad.validate(), ConfigError);
    bad = cfg;
    bad.batch_size = 0;
    EXPECT_THROW(bad.validate(), ConfigError);
    cfg.seed = 42;
    cfg.augment.crop_height = 96;
    const auto back = train_config_from_json(to_json(cfg));
    EXPECT_EQ(to_json(back), to_json(cfg));
}

TEST(Batching, EpochOrderIsAPermutationAndPure) {
    for (int epoch = 0; epoch < 5; ++epoch) {
        auto a = epoch_order(17, 3, epoch);
        EXPECT_EQ(a, epoch_order(17, 3, epoch));
        std::sort(a.begin(), a.end());
        for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], i);
    }
    EXPECT_NE(epoch_order(17, 3, 0), epoch_order(17, 3, 1));
    EXPECT_NE(sample_seed(3, 0, 1), sample_seed(3, 0, 2));
    EXPECT_EQ(sample_seed(3, 4, 5), sample_seed(3, 4, 5));
}

TEST(Batching, CollateShapes) {
    const auto set = synth_set(3, 32, 1);
    const auto b = collate(set, {0, 1, 2});
    EXPECT_EQ(b.rgb.sizes(), (std::vector<int64_t>{3, 3, 32, 32}));
    EXPECT_EQ(b.thermal.sizes(), (std::vector<int64_t>{3, 1, 32, 32}));
    EXPECT_EQ(b.mask.sizes(), (std::vector<int64_t>{3, 1, 32, 32}));
    EXPECT_EQ(b.mask.sum().item<double>(), cv::countNonZero(*set[0].mask) + cv::countNonZero(*set[1].mask) +
                                               cv::countNonZero(*set[2].mask));
    const auto back = tensor_to_map(b.thermal[1]);
    EXPECT_EQ(cv::norm(back, set[1].thermal, cv::NORM_INF), 0.0);
}

TEST(Split, HoldsOutWholeScenes) {
    const auto set = synth_set(20, 16, 1, 10);
    const auto [train_idx, val_idx] = split_by_scene(set, 0.2, 5);
    EXPECT_EQ(train_idx.size() + val_idx.size(), 20u);
    EXPECT_EQ(val_idx.size(), 4u);
    std::set<std::string> val_scenes;
    for (auto i : val_idx) val_scenes.insert(set[i].meta.scene);
    for (auto i : train_idx) EXPECT_FALSE(val_scenes.count(set[i].meta.scene));
    EXPECT_TRUE(split_by_scene(set, 0.0, 5).second.empty());
}

TEST(Train, FirstLossIsNearLn2) {
    const auto set = synth_set(4, 32, 10);
    auto cfg = quick_config(2, 4);
    cfg.max_steps = 1;
    const auto r = train(tiny(), cfg, set);
    ASSERT_EQ(r.history.steps.size(), 1u);
    EXPECT_NEAR(r.history.steps[0].loss, std::log(2.0), 0.02);
}

TEST(Train, DeterministicRunsMatch) {
    const auto set = synth_set(6, 32, 20);
    auto cfg = quick_config(4, 2);
    cfg.augment_enabled = true;
    cfg.augment.crop_height = cfg.augment.crop_width = 32;
    const auto a = train(tiny(), cfg, set);
    const auto b = train(tiny(), cfg, set);
    EXPECT_EQ(losses(a.history), losses(b.history));
    cfg.seed = 2;
    const auto c = train(tiny(), cfg, set);
    EXPECT_NE(losses(a.history), losses(c.history));
}

TEST(Train, ResumeReproducesUninterruptedRun) {
    const auto set = synth_set(6, 32, 30);
    const auto dir = scratch_dir("resume");
    auto cfg = quick_config(4, 2);
    cfg.lr_switch_epoch = 2;
    cfg.augment_enabled = true;
    cfg.augment.crop_height = cfg.augment.crop_width = 32;
    const auto full = train(tiny(), cfg, set, {dir / "full"});

    auto first = cfg;
    first.total_epochs = 3;
    train(tiny(), first, set, {dir / "part"});
    TrainOptions resume{dir / "resumed", dir / "part" / "last.pt", {}};
    const auto rest = train(tiny(), cfg, set, resume);

    EXPECT_EQ(losses(rest.history), losses(full.history));
    EXPECT_EQ(rest.history.steps.back().lr, 1e-3);
    const auto pa = nnet::load_model(*full.last_checkpoint);
    const auto pb = nnet::load_model(*rest.last_checkpoint);
    const auto a = pa->named_parameters();
    const auto b = pb->named_parameters();
    for (const auto& item : a) EXPECT_TRUE(torch::equal(item.value(), b[item.key()])) << item.key();
}

TEST(Train, WritesLogsAndCheckpoints) {
    const auto set = synth_set(4, 32, 40, 4);
    const auto dir = scratch_dir("outputs");
    auto cfg = quick_config(3, 2);
    cfg.checkpoint_every = 2;
    cfg.validation_fraction = 0.25;
    std::vector<StepRecord> seen;
    const auto r = train(tiny(), cfg, set, {dir, std::nullopt, [&](const StepRecord& s) { seen.push_back(s); }});
    EXPECT_TRUE(fs::exists(dir / "last.pt"));
    EXPECT_TRUE(fs::exists(dir / "best.pt"));
    EXPECT_TRUE(fs::exists(dir / "epoch_0002.pt"));
    EXPECT_EQ(r.history.epochs.size(), 3u);
    EXPECT_TRUE(r.history.epochs[0].val_iou.has_value());
    EXPECT_GE(r.history.best_epoch, 0);
    EXPECT_LT(r.history.best_epoch, 3);
    // 3 training samples, batch 2: two steps per epoch.
    EXPECT_EQ(seen.size(), 6u);
    std::ifstream log(dir / "train_log.jsonl");
    int lines = 0;
    for (std::string line; std::getline(log, line);) {
        const auto j = nlohmann::json::parse(line);
        EXPECT_TRUE(j.contains("loss"));
        ++lines;
    }
    EXPECT_GE(lines, 6);
    const auto h = history_from_json(to_json(r.history));
    EXPECT_EQ(to_json(h), to_json(r.history));
}

TEST(Train, SmoothedLossDecreasesEarly) {
    const auto set = synth_set(8, 32, 100);
    auto cfg = quick_config(50, 8);
    cfg.lr_initial = cfg.lr_after = 1e-2;
    const auto l = losses(train(tiny(), cfg, set).history);
    ASSERT_EQ(l.size(), 50u);
    double previous = std::numeric_limits<double>::infinity();
    for (int w = 0; w < 5; ++w) {
        double mean = 0.0;
        for (int i = 0; i < 10; ++i) mean += l[static_cast<std::size_t>(10 * w + i)] / 10.0;
        EXPECT_LE(mean, previous) << "window " << w;
        previous = mean;
    }
}

TEST(Train, NonFiniteLossAborts) {
    const auto set = synth_set(4, 32, 50);
    auto cfg = quick_config(20, 2);
    cfg.lr_initial = cfg.lr_after = 1e30;
    cfg.grad_clip = 0.0;
    try {
        train(tiny(), cfg, set);
        FAIL() << "training did not diverge";
    } catch (const TrainingDiverged& e) {
        const std::string what = e.what();
        EXPECT_NE(what.find("batch"), std::string::npos) << what;
    }
}

TEST(Evaluate, StubPredictors) {
    auto glass = synth_set(3, 32, 60);
    std::vector<datakit::RgbtSample> clear;
    for (int i = 0; i < 3; ++i) clear.push_back(datakit::synth_scene(70 + static_cast<std::uint64_t>(i), {32, 32}, 0));
    const Predictor zeros = [](const datakit::RgbtSample& s) { return ProbabilityMap(ProbabilityMap::zeros(s.size())); };
    const Predictor perfect = [](const datakit::RgbtSample& s) {
        ProbabilityMap p;
        s.mask->convertTo(p, CV_32F);
        return p;
    };
    auto r = evaluate(zeros, clear);
    EXPECT_EQ(r.without_glass->iou_star, 100.0);
    EXPECT_EQ(r.without_glass->fpr, 0.0);
    EXPECT_FALSE(r.with_glass);
    r = evaluate(zeros, glass);
    EXPECT_EQ(r.with_glass->iou, 0.0);
    r = evaluate(perfect, glass);
    EXPECT_EQ(r.with_glass->iou, 100.0);
    EXPECT_EQ(r.with_glass->mae, 0.0);
}

TEST(Evaluate, UntrainedModelReportIsFinite) {
    torch::manual_seed(0);
    nnet::GlassSegNet model(tiny(), false);
    auto set = synth_set(3, 40, 80);
    set.push_back(datakit::synth_scene(90, {40, 40}, 0));
    const auto r = evaluate(model_predictor(model), set);
    ASSERT_TRUE(r.with_glass && r.without_glass);
    for (double v : {r.with_glass->mae, r.with_glass->iou, r.with_glass->f_beta, r.with_glass->ber,
                     r.without_glass->iou_star, r.without_glass->fpr, r.all_mae}) {
        EXPECT_TRUE(std::isfinite(v));
    }
    // 40 px rounds to a 32 px network input; the map comes back at 40.
    EXPECT_EQ(predict(model, set[0]).size(), cv::Size(40, 40));
    EXPECT_EQ(network_dimension(40), 32);
    EXPECT_EQ(network_dimension(50), 64);
    EXPECT_EQ(network_dimension(5), 32);
}

TEST(Evaluate, MissingModalityIsAnError) {
    nnet::GlassSegNet model(tiny(), false);
    auto s = datakit::synth_scene(1, {32, 32}, 1);
    s.thermal = cv::Mat1f();
    EXPECT_THROW(predict(model, s), InputError);
    auto rgb_cfg = tiny();
    rgb_cfg.input = nnet::InputKind::kRgbOnly;
    nnet::GlassSegNet rgb_model(rgb_cfg, false);
    EXPECT_EQ(predict(rgb_model, s).size(), cv::Size(32, 32));
}

TEST(Ablation, GridAndMatrix) {
    const auto grid = ablation_grid(tiny(), {nnet::InputKind::kRgbt, nnet::InputKind::kRgbOnly},
                                    {nnet::FusionKind::kMfm, nnet::FusionKind::kSimpleSum}, {});
    ASSERT_EQ(grid.size(), 4u);
    std::set<std::string> names;
    for (const auto& v : grid) names.insert(v.name);
    EXPECT_EQ(names.size(), 4u);

    std::vector<AblationVariant> five(grid.begin(), grid.end());
    auto dc = tiny();
    dc.decoder = nnet::DecoderKind::kDirectConcat;
    five.push_back({"dc-decoder", dc});
    auto cfg = quick_config(1, 2);
    cfg.lr_switch_epoch = 0;
    const auto set = synth_set(2, 32, 120);
    const auto rows = run_ablation_matrix(five, cfg, set, set);
    ASSERT_EQ(rows.size(), 5u);
    const auto table = render_ablation_table(rows);
    for (const auto& v : five) EXPECT_NE(table.find(v.name), std::string::npos);
    for (const auto& row : rows) EXPECT_TRUE(std::isfinite(row.final_loss));
}

TEST(Ablation, SmokeStepForDualAndSingleInputs) {
    const auto s = datakit::synth_scene(3, {32, 32}, 1);
    for (auto kind : {nnet::InputKind::kRgbOnly, nnet::InputKind::kDualRgb}) {
        auto cfg = tiny();
        cfg.input = kind;
        EXPECT_TRUE(std::isfinite(smoke_step(cfg, s)));
    }
}
