#include "glasseg/metrics/report.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "glasseg/core/errors.hpp"

namespace glasseg::metrics {

nlohmann::json to_json(const MetricsReport& report) {
    nlohmann::json j;
    j["schema_version"] = kReportSchemaVersion;
    j["n_with"] = report.n_with;
    j["n_without"] = report.n_without;
    if (report.with_glass) {
        const auto& w = *report.with_glass;
        j["with_glass"] = {{"mae", w.mae}, {"iou", w.iou}, {"f_beta", w.f_beta}, {"ber", w.ber}};
    } else {
        j["with_glass"] = nullptr;
    }
    if (report.without_glass) {
        const auto& w = *report.without_glass;
        j["without_glass"] = {{"mae", w.mae}, {"iou_star", w.iou_star}, {"fpr", w.fpr}};
    } else {
        j["without_glass"] = nullptr;
    }
    j["all"] = {{"mae", report.all_mae}};
    return j;
}

MetricsReport report_from_json(const nlohmann::json& j) {
    try {
        if (j.at("schema_version").get<int>() != kReportSchemaVersion) {
            throw InputError("unsupported report schema_version");
        }
        MetricsReport r;
        r.n_with = j.at("n_with").get<int>();
        r.n_without = j.at("n_without").get<int>();
        if (const auto& w = j.at("with_glass"); !w.is_null()) {
            r.with_glass = WithGlassMetrics{w.at("mae").get<double>(), w.at("iou").get<double>(),
                                            w.at("f_beta").get<double>(), w.at("ber").get<double>()};
        }
        if (const auto& w = j.at("without_glass"); !w.is_null()) {
            r.without_glass = WithoutGlassMetrics{w.at("mae").get<double>(), w.at("iou_star").get<double>(),
                                                  w.at("fpr").get<double>()};
        }
        r.all_mae = j.at("all").at("mae").get<double>();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed metrics report: ") + e.what());
    }
}

namespace {

std::string cell(double value, int precision) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.*f", precision, value);
    return buf;
}

}  // namespace

std::string render_table(const std::vector<std::pair<std::string, MetricsReport>>& rows) {
    std::size_t name_w = 6;
    for (const auto& [name, _] : rows) name_w = std::max(name_w, name.size());

    std::ostringstream out;
    auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w > s.size() ? w - s.size() : 0, ' '); };
    const std::size_t col = 9;

    out << pad("", name_w) << " | " << pad("Images with glass", 4 * col) << "| "
        << pad("Images without glass", 3 * col) << "| All images\n";
    out << pad("Method", name_w) << " | ";
    for (const char* h : {"MAE", "IOU", "Fbeta", "BER"}) out << pad(h, col);
    out << "| ";
    for (const char* h : {"MAE", "IOU*", "FPR"}) out << pad(h, col);
    out << "| MAE\n";
    out << std::string(name_w + 3 + 7 * col + 14, '-') << '\n';

    for (const auto& [name, r] : rows) {
        out << pad(name, name_w) << " | ";
        if (r.with_glass) {
            out << pad(cell(r.with_glass->mae, 3), col) << pad(cell(r.with_glass->iou, 2), col)
                << pad(cell(r.with_glass->f_beta, 3), col) << pad(cell(r.with_glass->ber, 3), col);
        } else {
            for (int i = 0; i < 4; ++i) out << pad("n/a", col);
        }
        out << "| ";
        if (r.without_glass) {
            out << pad(cell(r.without_glass->mae, 3), col) << pad(cell(r.without_glass->iou_star, 2), col)
                << pad(cell(r.without_glass->fpr, 2), col);
        } else {
            for (int i = 0; i < 3; ++i) out << pad("n/a", col);
        }
        out << "| " << cell(r.all_mae, 3) << '\n';
    }
    return out.str();
}

void write_report(const MetricsReport& report, const std::string& name, const std::filesystem::path& out_dir,
                  const std::string& stem) {
    std::filesystem::create_directories(out_dir);
    std::ofstream json(out_dir / (stem + ".json"));
    json << to_json(report).dump(2) << '\n';
    std::ofstream txt(out_dir / (stem + ".txt"));
    txt << render_table({{name, report}});
    if (!json || !txt) throw InputError("cannot write report into " + out_dir.string());
}

}  // namespace glasseg::metrics
