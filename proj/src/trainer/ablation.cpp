#include "glasseg/trainer/ablation.hpp"

#include "glasseg/core/errors.hpp"
#include "glasseg/metrics/report.hpp"
#include "glasseg/nnet/model.hpp"
#include "glasseg/trainer/batching.hpp"
#include "glasseg/trainer/evaluate.hpp"
#include "glasseg/trainer/loss.hpp"
#include "glasseg/trainer/train.hpp"

namespace glasseg::trainer {

namespace {

template <typename T>
std::vector<T> or_base(const std::vector<T>& axis, T base) {
    return axis.empty() ? std::vector<T>{base} : axis;
}

}  // namespace

std::vector<AblationVariant> ablation_grid(const nnet::ModelConfig& base, const std::vector<nnet::InputKind>& inputs,
                                           const std::vector<nnet::FusionKind>& fusions,
                                           const std::vector<nnet::DecoderKind>& decoders,
                                           const std::vector<nnet::BackboneKind>& backbones) {
    std::vector<AblationVariant> out;
    for (auto input : or_base(inputs, base.input)) {
        for (auto fusion : or_base(fusions, base.fusion)) {
            for (auto decoder : or_base(decoders, base.decoder)) {
                for (auto backbone : or_base(backbones, base.backbone)) {
                    AblationVariant v{"", base};
                    v.model.input = input;
                    v.model.fusion = fusion;
                    v.model.decoder = decoder;
                    v.model.backbone = backbone;
                    v.name = std::string(nnet::to_string(input)) + "/" + std::string(nnet::to_string(fusion)) + "/" +
                             std::string(nnet::to_string(decoder)) + "/" + std::string(nnet::to_string(backbone));
                    out.push_back(std::move(v));
                }
            }
        }
    }
    return out;
}

std::vector<AblationRow> run_ablation_matrix(const std::vector<AblationVariant>& variants, const TrainConfig& cfg,
                                             const std::vector<datakit::RgbtSample>& train_set,
                                             const std::vector<datakit::RgbtSample>& test_set) {
    std::vector<AblationRow> rows;
    for (const auto& v : variants) {
        auto result = train(v.model, cfg, train_set);
        AblationRow row{v.name, v.model, evaluate(model_predictor(result.model), test_set),
                        result.history.steps.empty() ? 0.0 : result.history.steps.back().loss};
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string render_ablation_table(const std::vector<AblationRow>& rows) {
    std::vector<std::pair<std::string, metrics::MetricsReport>> table;
    for (const auto& r : rows) table.emplace_back(r.name, r.report);
    return metrics::render_table(table);
}

double smoke_step(const nnet::ModelConfig& config, const datakit::RgbtSample& sample, std::uint64_t seed) {
    torch::manual_seed(seed);
    nnet::GlassSegNet model(config, false);
    model->train();
    torch::optim::AdamW optimizer(model->parameters(), torch::optim::AdamWOptions(1e-4).weight_decay(1e-4));
    const std::array<datakit::RgbtSample, 2> pair{sample, sample};
    const auto batch = collate(pair, {0, 1});
    const auto out = model(nnet::make_input(config.input, batch.rgb, batch.thermal));
    const auto loss = bce_loss_with_logits(out.logits, batch.mask);
    loss.backward();
    optimizer.step();
    return loss.item<double>();
}

}  // namespace glasseg::trainer
