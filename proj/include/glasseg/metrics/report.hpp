#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "glasseg/metrics/metrics.hpp"

namespace glasseg::metrics {

inline constexpr int kReportSchemaVersion = 1;

/// {"schema_version", "n_with", "n_without", "with_glass": {mae,iou,f_beta,ber} | null,
///  "without_glass": {mae,iou_star,fpr} | null, "all": {mae}}
nlohmann::json to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& j);

/// One row per report in the with-glass / without-glass / all-images column layout.
/// Groups with no images render as "n/a".
std::string render_table(const std::vector<std::pair<std::string, MetricsReport>>& rows);

/// Writes <stem>.json and <stem>.txt into out_dir.
void write_report(const MetricsReport& report, const std::string& name, const std::filesystem::path& out_dir,
                  const std::string& stem = "report");

}  // namespace glasseg::metrics
