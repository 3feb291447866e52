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


#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "promptleak/app.hpp"
#include "promptleak/attack.hpp"
#include "promptleak/checkpoint.hpp"
#include "promptleak/decoder.hpp"
#include "promptleak/evaluator.hpp"

namespace promptleak {

inline constexpr std::string_view kToolName = "promptleak";
inline constexpr std::string_view kToolVersion = "0.1.0";

struct DatasetRecord {
  std::string id;
  std::string instruction;
  std::vector<Exemplar> exemplars;
  std::optional<std::string> split;  // "shadow" or "target"

  SystemPromptSpec prompt_spec() const;
  std::string prompt_text() const { return system_prompt_text(prompt_spec()); }

  bool operator==(const DatasetRecord&) const = default;
};

// One JSON object per line; blank lines are skipped. Errors carry the line
// number (kParse) or the duplicated id (kInvalidInput).
std::vector<DatasetRecord> parse_dataset(std::string_view text,
                                         std::string_view source = "<memory>");
std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path);
std::string dataset_to_string(const std::vector<DatasetRecord>& records);

struct RecordSplit {
  std::vector<DatasetRecord> shadow;
  std::vector<DatasetRecord> targets;
};

// Seeded shuffle; the first `shadow_size` records become the shadow set.
// Both halves keep file order.
RecordSplit split_records(const std::vector<DatasetRecord>& records,
                          std::size_t shadow_size, std::uint64_t seed);

// Uses the records' own split fields when every record carries one.
RecordSplit choose_split(const std::vector<DatasetRecord>& records,
                         std::size_t shadow_size, std::uint64_t seed);

struct ShadowTargetSplit {
  ShadowDataset shadow;
  std::vector<DatasetRecord> targets;
};

ShadowTargetSplit split_shadow_target(const std::vector<DatasetRecord>& records,
                                      std::size_t shadow_size, std::uint64_t seed,
                                      const Vocabulary& vocab);

ShadowDataset make_shadow(const std::vector<DatasetRecord>& records,
                          const Vocabulary& vocab);

// Training corpus: prompt texts of a .jsonl dataset, otherwise the
// non-blank lines of a text file.
std::vector<std::string> load_corpus_lines(const std::filesystem::path& path);

struct TrainSettings {
  TrainConfig train;
  std::size_t vocab_cap = Vocabulary::kDefaultCap;
};

// Keys: epochs, learning_rate, embed_scale, embed_dim, context, hidden,
// vocab_cap. Missing keys keep their defaults.
TrainSettings parse_train_settings(std::string_view json_text);
TrainSettings load_train_settings(const std::filesystem::path& path);

struct TrainedCheckpoint {
  Checkpoint checkpoint;
  std::vector<double> epoch_losses;
};

TrainedCheckpoint train_checkpoint(const std::vector<std::string>& lines,
                                   const TrainSettings& settings, std::uint64_t seed);

struct MockConfig {
  std::vector<MockRule> rules = default_echo_rules();
  std::string fallback = std::string(MockBackend::kDefaultFallback);
};

struct ExperimentConfig {
  std::filesystem::path dataset;
  std::optional<std::filesystem::path> checkpoint;  // model backend
  std::optional<MockConfig> mock;                   // mock backend
  std::optional<std::filesystem::path> guards;
  std::filesystem::path out;
  std::size_t shadow_size = 16;
  std::size_t target_size = 0;  // 0: every target record
  AttackConfig attack;
  DecodingStrategy decoding = DecodingStrategy::greedy();
  DefenseConfig defense;
  std::string transform_id = "identity";
  std::optional<std::uint64_t> seed;
  std::size_t workers = 0;  // 0: hardware concurrency

  // Throws Error(kConfig) on a missing seed, missing backend, missing files
  // or inconsistent fields.
  void validate() const;
  std::uint64_t master_seed() const;
};

// Relative paths in the document resolve against `base_dir`.
ExperimentConfig parse_experiment_config(std::string_view json_text,
                                         const std::filesystem::path& base_dir = {});
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
std::string experiment_config_to_json(const ExperimentConfig& config);

struct AqRow {
  std::size_t aq_index = 0;
  std::string response;
  std::string inverted;
  MetricReport metrics;
};

struct TargetResult {
  std::string app_id;
  std::string target_text;
  std::vector<AqRow> rows;
  std::string reconstruction;
  MetricReport reconstruction_metrics;
  MetricReport best;  // aggregate over the AQ rows and the reconstruction
};

struct MetricStat {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

struct ReportSummary {
  MetricStat sm;
  MetricStat em;
  MetricStat eed;
  MetricStat ss;
};

struct ReportAq {
  std::vector<std::string> tokens;
  std::string transform_id;
  std::uint64_t seed = 0;
  double final_loss = 0.0;  // NaN when the AQ was not optimized
};

struct Timings {
  double attack_seconds = 0.0;
  double evaluate_seconds = 0.0;
  double total_seconds = 0.0;
};

struct ExperimentReport {
  std::string tool = std::string(kToolName);
  std::string version = std::string(kToolVersion);
  std::string config_json;  // full snapshot of the attack-side config
  std::string target_config_json;
  std::uint64_t seed = 0;
  std::string shadow_fingerprint;
  std::string target_fingerprint;
  std::vector<ReportAq> aqs;
  std::vector<TargetResult> targets;
  ReportSummary summary;
  Timings timings;  // never serialized into the report itself
};

ReportSummary summarize(const std::vector<TargetResult>& targets);

struct AttackOutput {
  std::shared_ptr<const Vocabulary> vocab;
  std::vector<AdversarialQuery> queries;
};

// Attack phase only. Without a checkpoint the AQs are initialized, not optimized.
AttackOutput run_attack(const ExperimentConfig& config);

ExperimentReport run_experiment(const ExperimentConfig& config);

// AQs optimized against `attacker`'s shadow model, evaluated on applications
// built from `target`'s dataset and backend.
ExperimentReport transfer_experiment(const ExperimentConfig& attacker,
                                     const ExperimentConfig& target);

enum class ReportFormat { kStructured, kCsv };

ReportFormat parse_report_format(std::string_view text);

// CSV columns: app_id,aq_id,aggregate,sm,em,eed,ss. One row per (target, AQ),
// a "reconstruction" and a "best" row per target, then one "mean" row.
inline constexpr std::string_view kCsvHeader = "app_id,aq_id,aggregate,sm,em,eed,ss";

std::string report_to_string(const ExperimentReport& report, ReportFormat format);
ExperimentReport report_from_string(std::string_view structured);
void emit_report(const ExperimentReport& report, ReportFormat format,
                 const std::filesystem::path& path);
void write_timings(const ExperimentReport& report, const std::filesystem::path& path);

}  // namespace promptleak
