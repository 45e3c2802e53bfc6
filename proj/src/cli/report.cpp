#include "cli/report.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dgpe::cli {

namespace {

double number(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::numeric_limits<double>::quiet_NaN();
  const auto& v = j.at(key);
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
  }
  return v.get<double>();
}

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

}  // namespace

ReportSummary render_report(const nlohmann::json& manifest) {
  if (!manifest.contains("claims") || !manifest.at("claims").is_array()) {
    throw std::invalid_argument("manifest has no claims");
  }
  ReportSummary out;
  std::ostringstream os;
  char line[256];
  std::snprintf(line, sizeof line, "%-34s %-14s %-14s %-14s %s\n", "claim", "observed", "lower",
                "upper", "status");
  os << "command: " << manifest.value("command", std::string("?")) << "\n" << line;
  for (const auto& c : manifest.at("claims")) {
    const double obs = number(c, "observed");
    const double lo = number(c, "lower");
    const double hi = number(c, "upper");
    const bool pass = c.value("pass", true) && obs >= lo && obs <= hi;
    std::snprintf(line, sizeof line, "%-34s %-14s %-14s %-14s %s\n",
                  c.value("name", std::string("?")).c_str(), fmt(obs).c_str(), fmt(lo).c_str(),
                  fmt(hi).c_str(), pass ? "PASS" : "FAIL");
    os << line;
    (pass ? out.pass_rows : out.fail_rows)++;
  }
  if (manifest.contains("targets")) {
    os << "limits:";
    for (const auto& [k, v] : manifest.at("targets").items()) os << " " << k << "=" << fmt(v.get<double>());
    os << "\n";
  }
  os << (out.fail_rows == 0 ? "PASS" : "FAIL") << ": " << out.pass_rows << " passed, "
     << out.fail_rows << " failed\n";
  out.text = os.str();
  return out;
}

}  // namespace dgpe::cli
