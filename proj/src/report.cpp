// Copyright 2026 The promptleak Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <cstdio>
#include <limits>

#include "json.hpp"
#include "json_io.hpp"
#include "promptleak/error.hpp"
#include "promptleak/harness.hpp"

namespace promptleak {

using nlohmann::json;

namespace {

json metrics_to_json(const MetricReport& m) {
  return json{{"sm", m.sm}, {"em", m.em}, {"eed", m.eed}, {"ss", m.ss}};
}

MetricReport metrics_from_json(const json& node) {
  MetricReport m;
  m.sm = node.at("sm").get<int>();
  m.em = node.at("em").get<int>();
  m.eed = node.at("eed").get<double>();
  m.ss = node.at("ss").get<double>();
  return m;
}

json stat_to_json(const MetricStat& s) { return json{{"mean", s.mean}, {"std", s.std}}; }

MetricStat stat_from_json(const json& node) {
  return {node.at("mean").get<double>(), node.at("std").get<double>()};
}

std::string number(double value) {
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%.17g", value);
  return buffer;
}

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  return out + "\"";
}

std::string csv_row(const std::string& app, const std::string& aq, const std::string& kind,
                    double sm, double em, double eed, double ss) {
  return csv_field(app) + "," + aq + "," + kind + "," + number(sm) + "," + number(em) + "," +
         number(eed) + "," + number(ss) + "\n";
}

std::string to_csv(const ExperimentReport& report) {
  std::string out = std::string(kCsvHeader) + "\n";
  for (const TargetResult& target : report.targets) {
    for (const AqRow& row : target.rows) {
      const MetricReport& m = row.metrics;
      out += csv_row(target.app_id, std::to_string(row.aq_index), "none", m.sm, m.em, m.eed, m.ss);
    }
    const MetricReport& r = target.reconstruction_metrics;
    out += csv_row(target.app_id, "", "reconstruction", r.sm, r.em, r.eed, r.ss);
    const MetricReport& b = target.best;
    out += csv_row(target.app_id, "", "best", b.sm, b.em, b.eed, b.ss);
  }
  const ReportSummary& s = report.summary;
  out += csv_row("", "", "mean", s.sm.mean, s.em.mean, s.eed.mean, s.ss.mean);
  return out;
}

json to_json(const ExperimentReport& report) {
  json doc;
  doc["tool"] = report.tool;
  doc["version"] = report.version;
  doc["seed"] = report.seed;
  doc["config"] = json::parse(report.config_json);
  doc["target_config"] = json::parse(report.target_config_json);
  doc["shadow_fingerprint"] = report.shadow_fingerprint;
  doc["target_fingerprint"] = report.target_fingerprint;
  doc["aqs"] = json::array();
  for (const ReportAq& aq : report.aqs) {
    json node{{"tokens", aq.tokens}, {"transform_id", aq.transform_id}, {"seed", aq.seed}};
    node["final_loss"] = std::isnan(aq.final_loss) ? json(nullptr) : json(aq.final_loss);
    doc["aqs"].push_back(std::move(node));
  }
  doc["targets"] = json::array();
  for (const TargetResult& target : report.targets) {
    json rows = json::array();
    for (const AqRow& row : target.rows) {
      json node = metrics_to_json(row.metrics);
      node["aq"] = row.aq_index;
      node["response"] = row.response;
      node["inverted"] = row.inverted;
      rows.push_back(std::move(node));
    }
    doc["targets"].push_back({{"app_id", target.app_id},
                              {"target", target.target_text},
                              {"rows", rows},
                              {"reconstruction", target.reconstruction},
                              {"reconstruction_metrics", metrics_to_json(target.reconstruction_metrics)},
                              {"best", metrics_to_json(target.best)}});
  }
  doc["summary"] = {{"sm", stat_to_json(report.summary.sm)},
                    {"em", stat_to_json(report.summary.em)},
                    {"eed", stat_to_json(report.summary.eed)},
                    {"ss", stat_to_json(report.summary.ss)}};
  return doc;
}

}  // namespace

ReportFormat parse_report_format(std::string_view text) {
  if (text == "structured" || text == "json") return ReportFormat::kStructured;
  if (text == "csv") return ReportFormat::kCsv;
  throw Error(ErrorCode::kParse, "unknown report format '" + std::string(text) + "'");
}

std::string report_to_string(const ExperimentReport& report, ReportFormat format) {
  if (format == ReportFormat::kCsv) return to_csv(report);
  return to_json(report).dump(2) + "\n";
}

ExperimentReport report_from_string(std::string_view structured) {
  try {
    const json doc = json::parse(structured);
    ExperimentReport report;
    report.tool = doc.at("tool").get<std::string>();
    report.version = doc.at("version").get<std::string>();
    report.seed = doc.at("seed").get<std::uint64_t>();
    report.config_json = doc.at("config").dump(2);
    report.target_config_json = doc.at("target_config").dump(2);
    report.shadow_fingerprint = doc.at("shadow_fingerprint").get<std::string>();
    report.target_fingerprint = doc.at("target_fingerprint").get<std::string>();
    for (const json& node : doc.at("aqs")) {
      ReportAq aq;
      aq.tokens = node.at("tokens").get<std::vector<std::string>>();
      aq.transform_id = node.at("transform_id").get<std::string>();
      aq.seed = node.at("seed").get<std::uint64_t>();
      aq.final_loss = node.at("final_loss").is_null() ? std::numeric_limits<double>::quiet_NaN()
                                                      : node["final_loss"].get<double>();
      report.aqs.push_back(std::move(aq));
    }
    for (const json& node : doc.at("targets")) {
      TargetResult target;
      target.app_id = node.at("app_id").get<std::string>();
      target.target_text = node.at("target").get<std::string>();
      for (const json& r : node.at("rows")) {
        AqRow row;
        row.aq_index = r.at("aq").get<std::size_t>();
        row.response = r.at("response").get<std::string>();
        row.inverted = r.at("inverted").get<std::string>();
        row.metrics = metrics_from_json(r);
        target.rows.push_back(std::move(row));
      }
      target.reconstruction = node.at("reconstruction").get<std::string>();
      target.reconstruction_metrics = metrics_from_json(node.at("reconstruction_metrics"));
      target.best = metrics_from_json(node.at("best"));
      report.targets.push_back(std::move(target));
    }
    const json& summary = doc.at("summary");
    report.summary = {stat_from_json(summary.at("sm")), stat_from_json(summary.at("em")),
                      stat_from_json(summary.at("eed")), stat_from_json(summary.at("ss"))};
    return report;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed report: ") + e.what());
  }
}

void emit_report(const ExperimentReport& report, ReportFormat format,
                 const std::filesystem::path& path) {
  detail::write_text_file(path, report_to_string(report, format));
}

void write_timings(const ExperimentReport& report, const std::filesystem::path& path) {
  const json doc{{"attack_seconds", report.timings.attack_seconds},
                 {"evaluate_seconds", report.timings.evaluate_seconds},
                 {"total_seconds", report.timings.total_seconds}};
  detail::write_text_file(path, doc.dump(2) + "\n");
}

}  // namespace promptleak
