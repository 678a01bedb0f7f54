#include "surfman/scaling.hpp"

#include <nlohmann/json.hpp>

#include <numeric>
#include <sstream>

namespace surfman::scaling {

Rational Rational::make(std::int64_t num, std::int64_t den) {
  if (den == 0) throw ConfigError("Rational: zero denominator");
  if (den < 0) {
    num = -num;
    den = -den;
  }
  const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
  return Rational{g ? num / g : num, g ? den / g : den};
}

std::string Rational::str() const {
  std::ostringstream out;
  out << num;
  if (den != 1) out << "/" << den;
  return out.str();
}

void PlatformSpec::validate() const {
  if (name.empty()) throw ConfigError("platform: missing name");
  if (dof_su < 1) throw ConfigError("platform '" + name + "': dof_su must be >= 1");
  if (ss_su < 1) throw ConfigError("platform '" + name + "': ss_su must be >= 1");
  if (mw_min < 1) throw ConfigError("platform '" + name + "': mw_min must be >= 1");
}

Rational mobility_requirement(const PlatformSpec& spec) {
  spec.validate();
  return Rational::make(static_cast<std::int64_t>(spec.dof_su) * spec.mw_min,
                        spec.ss_su);
}

ComparisonReport reproduce_table(const std::vector<PlatformSpec>& database) {
  ComparisonReport report;
  for (const auto& spec : database) {
    ComparisonRow row;
    row.spec = spec;
    row.computed_mr = mobility_requirement(spec);
    row.flagged = !spec.note.empty();
    if (spec.published_mr.has_value()) {
      row.matches_published =
          row.computed_mr == Rational::make(*spec.published_mr, 1);
    }
    (row.matches_published ? report.matches : report.mismatches) += 1;
    report.rows.push_back(std::move(row));
  }
  return report;
}

std::string ComparisonReport::str() const {
  std::ostringstream out;
  out << "platform          dof  ss  mw  modes  mr_pub  mr_calc  status\n";
  for (const auto& row : rows) {
    std::string modes;
    modes += row.spec.translation ? 'T' : '-';
    modes += row.spec.rotation ? 'R' : '-';
    modes += row.spec.flipping ? 'F' : '-';
    char line[160];
    std::snprintf(line, sizeof(line), "%-17s %3d %3d %3d  %5s  %6s  %7s  %s%s\n",
                  row.spec.name.c_str(), row.spec.dof_su, row.spec.ss_su,
                  row.spec.mw_min, modes.c_str(),
                  row.spec.published_mr ? std::to_string(*row.spec.published_mr).c_str() : "-",
                  row.computed_mr.str().c_str(),
                  row.matches_published ? "OK" : "MISMATCH",
                  row.flagged ? " [flagged]" : "");
    out << line;
  }
  out << matches << "/" << rows.size() << " rows match the published column\n";
  for (const auto& row : rows) {
    if (row.flagged)
      out << "note (" << row.spec.name << "): " << row.spec.note << "\n";
  }
  return out.str();
}

std::vector<PlatformSpec> load_platforms_json(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& err) {
    throw ConfigError(std::string("platform database: ") + err.what());
  }
  if (!doc.contains("platforms") || !doc["platforms"].is_array())
    throw ConfigError("platform database: missing 'platforms' array");

  std::vector<PlatformSpec> out;
  for (const auto& entry : doc["platforms"]) {
    PlatformSpec spec;
    try {
      spec.name = entry.at("name").get<std::string>();
      spec.dof_su = entry.at("dof_su").get<int>();
      spec.ss_su = entry.at("ss_su").get<int>();
      spec.mw_min = entry.at("mw_min").get<int>();
      spec.workspace_text = entry.value("workspace", "");
      spec.object_size_text = entry.value("object_size", "");
      spec.object_size = spec.object_size_text.starts_with(">")
                             ? ObjectSizeRelation::Larger
                             : ObjectSizeRelation::Smaller;
      for (const auto& mode : entry.at("modes")) {
        const auto m = mode.get<std::string>();
        if (m == "translation") spec.translation = true;
        else if (m == "rotation") spec.rotation = true;
        else if (m == "flipping") spec.flipping = true;
        else throw ConfigError("platform '" + spec.name + "': unknown mode '" + m + "'");
      }
      if (entry.contains("mr")) spec.published_mr = entry["mr"].get<std::int64_t>();
      spec.note = entry.value("note", "");
    } catch (const nlohmann::json::exception& err) {
      throw ConfigError(std::string("platform database entry: ") + err.what());
    }
    spec.validate();
    out.push_back(std::move(spec));
  }
  return out;
}

}  // namespace surfman::scaling
