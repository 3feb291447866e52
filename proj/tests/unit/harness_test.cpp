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

#include "promptleak/harness.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "promptleak/checkpoint.hpp"
#include "promptleak/error.hpp"

namespace promptleak {
namespace {

namespace fs = std::filesystem;

const fs::path kData = PROMPTLEAK_DATA_DIR;

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "promptleak_harness_test";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<DatasetRecord> numbered_records(std::size_t n) {
  std::vector<DatasetRecord> records;
  for (std::size_t i = 0; i < n; ++i) {
    records.push_back({"r" + std::to_string(i), "Instruction number " + std::to_string(i) + ".", {}, {}});
  }
  return records;
}

TEST(Dataset, ParseValidateAndRoundTrip) {
  EXPECT_TRUE(parse_dataset("").empty());
  EXPECT_TRUE(parse_dataset("\n  \n").empty());
  const std::string line =
      R"({"id": "a", "instruction": "Be kind.", "exemplars": [{"x": "hi", "y": "hello"}], "split": "target"})";
  const auto records = parse_dataset(line);
  ASSERT_EQ(records.size(), 1u);
  EXPECT_EQ(records[0].id, "a");
  EXPECT_EQ(records[0].exemplars[0].y, "hello");
  EXPECT_EQ(records[0].split, std::optional<std::string>("target"));
  EXPECT_EQ(parse_dataset(dataset_to_string(records)), records);

  try {
    parse_dataset(line + "\n" + line, "file.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("'a'"), std::string::npos);
  }
  try {
    parse_dataset(line + "\n\n{broken", "file.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kParse);
    EXPECT_NE(std::string(e.what()).find("file.jsonl:3"), std::string::npos);
  }
  EXPECT_THROW(parse_dataset(R"({"id": "x", "instruction": "  "})"), Error);
}

TEST(Dataset, ShippedCorporaLoad) {
  EXPECT_EQ(load_dataset(kData / "roles.jsonl").size(), 20u);
  EXPECT_EQ(load_dataset(kData / "echo" / "echo_corpus.jsonl").size(), 16u);
}

TEST(Split, SeededDisjoint) {
  const auto records = numbered_records(20);
  const RecordSplit a = split_records(records, 16, 3);
  EXPECT_EQ(a.shadow.size(), 16u);
  EXPECT_EQ(a.targets.size(), 4u);
  std::set<std::string> ids;
  for (const auto& r : a.shadow) ids.insert(r.id);
  for (const auto& r : a.targets) EXPECT_FALSE(ids.count(r.id));
  const RecordSplit b = split_records(records, 16, 3);
  EXPECT_EQ(a.shadow, b.shadow);
  EXPECT_EQ(split_records(records, 19, 1).targets.size(), 1u);
  EXPECT_THROW(split_records(records, 20, 1), Error);

  const Vocabulary vocab = Vocabulary::build(std::vector<std::string>{"Instruction number"});
  const ShadowTargetSplit s = split_shadow_target(records, 16, 3, vocab);
  EXPECT_EQ(s.shadow.prompts.size(), 16u);
  EXPECT_EQ(s.shadow.sources.size(), 16u);
}

ExperimentConfig mock_config() {
  ExperimentConfig config = load_experiment_config(kData / "configs" / "mock_echo.json");
  config.workers = 3;
  return config;
}

TEST(Experiment, MockEchoLeaksThroughPrefix) {
  const ExperimentReport report = run_experiment(mock_config());
  EXPECT_EQ(report.targets.size(), 10u);
  EXPECT_EQ(report.summary.em.mean, 1.0);
}

TEST(Experiment, AttackPhaseMatchesFullRun) {
  const ExperimentConfig config = mock_config();
  const AttackOutput attack = run_attack(config);
  const ExperimentReport report = run_experiment(config);
  ASSERT_EQ(attack.queries.size(), report.aqs.size());
  for (std::size_t i = 0; i < attack.queries.size(); ++i) {
    std::vector<std::string> tokens;
    for (TokenId id : attack.queries[i].tokens) tokens.push_back(attack.vocab->token(id));
    EXPECT_EQ(tokens, report.aqs[i].tokens);
    EXPECT_EQ(attack.queries[i].transform_id, report.aqs[i].transform_id);
  }
}

TEST(Experiment, FilterDefeatsUntransformedEcho) {
  ExperimentConfig config = mock_config();
  config.transform_id = "identity";
  EXPECT_EQ(run_experiment(config).summary.em.mean, 0.0);
  config.defense.response_filter = false;
  EXPECT_EQ(run_experiment(config).summary.em.mean, 1.0);
}

TEST(Experiment, DeterministicAndRecomputable) {
  ExperimentConfig config = mock_config();
  config.transform_id = "word_reverse";
  const ExperimentReport a = run_experiment(config);
  config.workers = 1;
  const ExperimentReport b = run_experiment(config);
  EXPECT_EQ(report_to_string(a, ReportFormat::kStructured), report_to_string(b, ReportFormat::kStructured));
  EXPECT_EQ(report_to_string(a, ReportFormat::kCsv), report_to_string(b, ReportFormat::kCsv));

  const ReportSummary again = summarize(a.targets);
  EXPECT_EQ(again.ss.mean, a.summary.ss.mean);
  for (const TargetResult& t : a.targets) {
    std::vector<MetricReport> all;
    for (const AqRow& row : t.rows) all.push_back(row.metrics);
    all.push_back(t.reconstruction_metrics);
    const MetricReport best = aggregate(all);
    EXPECT_EQ(best.em, t.best.em);
    EXPECT_EQ(best.eed, t.best.eed);
  }
}

TEST(Report, CsvShapeAndStructuredRoundTrip) {
  const ExperimentReport report = run_experiment(mock_config());
  const std::string csv = report_to_string(report, ReportFormat::kCsv);
  const std::size_t lines = std::count(csv.begin(), csv.end(), '\n');
  const std::size_t targets = report.targets.size(), aqs = report.aqs.size();
  EXPECT_EQ(lines, 1 + targets * aqs + 2 * targets + 1);
  EXPECT_EQ(csv.substr(0, kCsvHeader.size()), kCsvHeader);

  const std::string text = report_to_string(report, ReportFormat::kStructured);
  const ExperimentReport back = report_from_string(text);
  EXPECT_NEAR(back.summary.em.mean, report.summary.em.mean, 1e-12);
  EXPECT_NEAR(back.summary.ss.std, report.summary.ss.std, 1e-12);
  EXPECT_EQ(report_to_string(back, ReportFormat::kStructured), text);
  EXPECT_NE(text.find("\"version\": \"" + std::string(kToolVersion) + "\""), std::string::npos);
  EXPECT_NE(text.find("\"seed\": 11"), std::string::npos);
  EXPECT_EQ(text.find("seconds"), std::string::npos);

  const fs::path path = scratch("report.csv");
  emit_report(report, ReportFormat::kCsv, path);
  EXPECT_TRUE(fs::exists(path));
  EXPECT_THROW(emit_report(report, ReportFormat::kCsv, "/proc/promptleak/none.csv"), Error);
}

TEST(Experiment, StageErrors) {
  ExperimentConfig config = mock_config();
  config.seed.reset();
  try {
    run_experiment(config);
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.stage(), "config");
  }
  EXPECT_THROW(parse_experiment_config("{\"seed\": \"x\"}"), Error);
}

fs::path train_checkpoint(const std::string& corpus_text, std::uint64_t seed, const std::string& name) {
  std::vector<std::string> lines;
  std::istringstream in(corpus_text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  const Vocabulary vocab = Vocabulary::build(lines);
  std::vector<TokenSequence> corpus;
  for (const auto& line : lines) corpus.push_back(vocab.encode(line));
  TrainConfig config;
  config.dims = LmDims{8, 8, 16};
  config.epochs = 3;
  config.seed = seed;
  const fs::path path = scratch(name);
  save_checkpoint(Checkpoint{train_lm(vocab, corpus, config).model, seed, ""}, path);
  return path;
}

ExperimentConfig model_config(const fs::path& checkpoint) {
  ExperimentConfig config;
  config.dataset = kData / "echo" / "echo_corpus.jsonl";
  config.checkpoint = checkpoint;
  config.shadow_size = 8;
  config.target_size = 3;
  config.attack.aq_length = 3;
  config.attack.step_size = 3;
  config.attack.top_k = 4;
  config.attack.n_queries = 2;
  config.decoding.max_new_tokens = 8;
  config.seed = 5;
  return config;
}

TEST(Transfer, SameSetupEqualsRun) {
  std::ifstream in(kData / "echo" / "echo_train.txt");
  const std::string text((std::istreambuf_iterator<char>(in)), {});
  const fs::path a = train_checkpoint(text, 1, "a.json");
  const fs::path b = train_checkpoint(text, 2, "b.json");
  const ExperimentConfig ca = model_config(a), cb = model_config(b);
  EXPECT_EQ(report_to_string(transfer_experiment(ca, ca), ReportFormat::kStructured),
            report_to_string(run_experiment(ca), ReportFormat::kStructured));

  const ExperimentReport cross = transfer_experiment(ca, cb);
  EXPECT_EQ(cross.shadow_fingerprint, model_fingerprint(load_checkpoint(a).model));
  EXPECT_EQ(cross.target_fingerprint, model_fingerprint(load_checkpoint(b).model));
  EXPECT_NE(cross.shadow_fingerprint, cross.target_fingerprint);

  const fs::path other = train_checkpoint("entirely different words here\nmore words", 3, "c.json");
  try {
    transfer_experiment(ca, model_config(other));
    FAIL();
  } catch (const StageError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kVocabularyMismatch);
    EXPECT_EQ(e.stage(), "backend");
  }
}

}  // namespace
}  // namespace promptleak
