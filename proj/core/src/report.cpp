#include "proverbkit/report.hpp"

#include <cstdio>
#include <map>
#include <optional>
#include <set>

#include "proverbkit/error.hpp"
#include "proverbkit/manifest.hpp"
#include "proverbkit/stages.hpp"

namespace proverbkit {

using nlohmann::json;

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string num(const json& v, int decimals) {
  if (v.is_null()) return "-";
  if (v.is_number_integer() || v.is_number_unsigned()) return std::to_string(v.get<long long>());
  return fixed(v.get<double>(), decimals);
}

std::string table(const std::vector<std::string>& header, const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width(header.size());
  auto cell_width = [](const std::string& s) {
    std::size_t n = 0;
    for (unsigned char c : s) n += (c & 0xC0) != 0x80;
    return n;
  };
  for (std::size_t i = 0; i < header.size(); ++i) width[i] = cell_width(header[i]);
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) width[i] = std::max(width[i], cell_width(r[i]));
  }
  auto line = [&](const std::vector<std::string>& cells) {
    std::string out = "|";
    for (std::size_t i = 0; i < cells.size(); ++i) {
      out += " " + cells[i] + std::string(width[i] - cell_width(cells[i]), ' ') + " |";
    }
    return out + "\n";
  };
  std::string out = line(header);
  std::vector<std::string> rule;
  for (auto w : width) rule.push_back(std::string(w, '-'));
  out += line(rule);
  for (const auto& r : rows) out += line(r);
  return out;
}

std::string display_lang(std::string code) {
  if (!code.empty()) code[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(code[0])));
  return code;
}

std::string phase_section(const json* doc) {
  std::string out = "## Phase counts\n\n";
  if (!doc || !doc->contains("directions") || (*doc)["directions"].empty()) return out + "no data\n";
  struct Cells {
    std::optional<json> from_en;
    std::optional<json> to_en;
  };
  std::map<std::string, Cells> langs;
  std::vector<std::vector<std::string>> detail;
  for (const auto& d : (*doc)["directions"]) {
    const std::string label = d.at("direction").get<std::string>();
    const auto dash = label.find('-');
    const std::string src = label.substr(0, dash);
    const std::string tgt = dash == std::string::npos ? "" : label.substr(dash + 1);
    if (src == "en") langs[tgt].from_en = d;
    else if (tgt == "en") langs[src].to_en = d;
    detail.push_back({label, num(d.at("p1"), 0), num(d.value("used", json(0)), 0),
                      num(d.value("not_used", json(0)), 0), num(d.value("undecided", json(0)), 0),
                      num(d.value("q_min", json(nullptr)), 6), num(d.value("threshold", json(nullptr)), 4),
                      num(d.at("p2"), 0)});
  }
  std::vector<std::vector<std::string>> rows;
  for (const auto& [lang, c] : langs) {
    auto cells = [](const std::optional<json>& d) -> std::vector<std::string> {
      if (!d) return {"-", "-", "-"};
      return {num(d->at("p1"), 0), num(d->at("p2"), 0), "-"};
    };
    std::vector<std::string> row{display_lang(lang)};
    for (auto& s : cells(c.from_en)) row.push_back(s);
    for (auto& s : cells(c.to_en)) row.push_back(s);
    rows.push_back(row);
  }
  if (!rows.empty()) {
    out += table({"Lang", "From-En P1", "From-En P2", "From-En P3", "To-En P1", "To-En P2", "To-En P3"}, rows);
    out += "\nP3 (human evaluation) is not produced by this toolkit.\n\n";
  }
  out += table({"Direction", "P1", "Used", "Not used", "Undecided", "q_min", "Threshold", "P2"}, detail);
  return out;
}

std::string score_section(const json* doc) {
  std::string out = "## Translation scores\n\n";
  if (!doc || !doc->contains("systems") || (*doc)["systems"].empty()) return out + "no data\n";
  std::vector<std::vector<std::string>> rows;
  for (const auto& [id, s] : (*doc)["systems"].items()) {
    rows.push_back({id, num(s.at("n"), 0), num(s.at("BLEU"), 2), num(s.at("CHRFPP"), 2)});
  }
  return out + table({"System", "N", "BLEU", "chrF++"}, rows);
}

std::string contamination_section(const json* doc) {
  std::string out = "## Contamination\n\n";
  if (!doc || !doc->contains("languages") || (*doc)["languages"].empty()) return out + "no data\n";
  out += "Share of probes with gamma > " + num(doc->at("cutoff"), 2) + " (tau " + num(doc->at("tau"), 2) +
         ", " + doc->value("lcs_unit", std::string("token")) + " LCS).\n\n";
  std::vector<std::vector<std::string>> rows;
  for (const auto& l : (*doc)["languages"]) {
    rows.push_back({display_lang(l.at("language").get<std::string>()), num(l.at("samples"), 0),
                    num(l.at("above"), 0), num(l.at("percent"), 1)});
  }
  return out + table({"Lang", "Samples", "Above cutoff", "Percent"}, rows);
}

std::string sensitivity_section(const json* doc) {
  std::string out = "## Metric sensitivity\n\n";
  if (!doc || !doc->contains("summary")) return out + "no data\n";
  const auto& s = (*doc)["summary"];
  out += "Flagged (pair, metric) entries: " + num(s.at("flagged_entries"), 0) + "\n";
  out += "Unique flagged pairs: " + num(s.at("unique_pairs"), 0) + "\n\n";
  if (s.at("flagged_entries").get<std::size_t>() == 0) return out + "no data\n";
  std::vector<std::vector<std::string>> metric_rows;
  for (const auto& [m, n] : s.at("per_metric").items()) metric_rows.push_back({m, num(n, 0)});
  out += table({"Metric", "Pairs"}, metric_rows) + "\n";
  std::vector<std::vector<std::string>> sys_rows;
  const auto& per_metric = s.at("by_system_per_metric");
  for (const auto& [sys, n] : s.at("by_system_unique").items()) {
    sys_rows.push_back({sys, num(n, 0), num(per_metric.value(sys, json(0)), 0)});
  }
  return out + table({"System", "Appearances (unique)", "Appearances (per metric)"}, sys_rows);
}

std::string judge_section(const json* doc) {
  std::string out = "## Judge win rates\n\n";
  if (!doc || !doc->contains("winrates")) return out + "no data\n";
  const auto& w = (*doc)["winrates"];
  out += "Seed " + num(doc->at("seed"), 0) + ", " + num(w.at("valid"), 0) + " valid verdicts, " +
         num(w.at("invalid"), 0) + " invalid.\n\n";
  out += table({"Summary", "Win X", "Win Y", "Tie"},
               {{"ties counted", num(w.at("win_x"), 4), num(w.at("win_y"), 4), num(w.at("tie"), 4)},
                {"ties excluded", num(w.value("win_x_no_tie", json(nullptr)), 4),
                 num(w.value("win_y_no_tie", json(nullptr)), 4), "-"}});
  return out;
}

}  // namespace

std::string render_report(const std::vector<json>& documents) {
  static const std::set<std::string_view> known{kFilterReportSchema, kScoreSummarySchema,
                                                kContaminationSchema, kSensitivitySchema,
                                                kJudgeSummarySchema};
  std::map<std::string, const json*> by_schema;
  std::map<std::string, std::set<std::string>> versions;  // version -> schemas
  for (const auto& doc : documents) {
    if (!doc.is_object() || !doc.contains("schema") || !doc["schema"].is_string()) {
      throw DataError("report input has no schema tag");
    }
    const std::string schema = doc["schema"].get<std::string>();
    if (!known.count(schema)) throw DataError("report input has unsupported schema '" + schema + "'");
    if (by_schema.count(schema)) throw DataError("two report inputs share schema '" + schema + "'");
    by_schema[schema] = &doc;
    versions[doc.value("tool_version", std::string("unknown"))].insert(schema);
  }
  auto get = [&](std::string_view schema) -> const json* {
    auto it = by_schema.find(std::string(schema));
    return it == by_schema.end() ? nullptr : it->second;
  };

  std::string out = "# proverbkit run summary\n\n";
  if (versions.size() > 1 || (versions.size() == 1 && versions.begin()->first != tool_version())) {
    out += "WARNING: stage outputs come from different tool versions:";
    for (const auto& [v, schemas] : versions) {
      out += " " + v + " (";
      bool first = true;
      for (const auto& s : schemas) {
        out += (first ? "" : ", ") + s;
        first = false;
      }
      out += ")";
    }
    out += "; this report uses " + tool_version() + ".\n\n";
  }
  out += phase_section(get(kFilterReportSchema)) + "\n";
  out += score_section(get(kScoreSummarySchema)) + "\n";
  out += contamination_section(get(kContaminationSchema)) + "\n";
  out += sensitivity_section(get(kSensitivitySchema)) + "\n";
  out += judge_section(get(kJudgeSummarySchema));
  return out;
}

}  // namespace proverbkit
