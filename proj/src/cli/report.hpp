#pragma once

#include <string>

#include <json.hpp>

namespace dgpe::cli {

struct ReportSummary {
  std::string text;
  int pass_rows = 0;
  int fail_rows = 0;
};

/// Text table of claims, observed values and bounds from a run manifest.
/// The pass column is recomputed from the stored bounds. Throws
/// std::invalid_argument when the manifest has no claims array.
ReportSummary render_report(const nlohmann::json& manifest);

}  // namespace dgpe::cli
