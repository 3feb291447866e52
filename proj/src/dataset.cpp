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

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "json.hpp"
#include "json_io.hpp"
#include "promptleak/error.hpp"
#include "promptleak/harness.hpp"
#include "promptleak/rng.hpp"

namespace promptleak {

using nlohmann::json;

SystemPromptSpec DatasetRecord::prompt_spec() const {
  SystemPromptSpec spec;
  spec.instruction = instruction;
  spec.exemplars = exemplars;
  return spec;
}

std::vector<DatasetRecord> parse_dataset(std::string_view text, std::string_view source) {
  std::vector<DatasetRecord> records;
  std::unordered_set<std::string> seen;
  std::size_t line_number = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_number;
    if (normalize_whitespace(line).empty()) {
      if (end == text.size()) break;
      continue;
    }
    const std::string where = std::string(source) + ":" + std::to_string(line_number);
    DatasetRecord record;
    try {
      const json node = json::parse(line);
      record.id = node.at("id").get<std::string>();
      record.instruction = node.at("instruction").get<std::string>();
      for (const json& ex : node.value("exemplars", json::array())) {
        record.exemplars.push_back({ex.at("x").get<std::string>(), ex.at("y").get<std::string>()});
      }
      if (node.contains("split")) record.split = node["split"].get<std::string>();
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, where + ": malformed record: " + e.what());
    }
    if (record.id.empty()) throw Error(ErrorCode::kParse, where + ": empty id");
    if (normalize_whitespace(record.instruction).empty()) {
      throw Error(ErrorCode::kParse, where + ": record '" + record.id + "' has an empty instruction");
    }
    if (record.split && *record.split != "shadow" && *record.split != "target") {
      throw Error(ErrorCode::kParse, where + ": unknown split '" + *record.split + "'");
    }
    if (!seen.insert(record.id).second) {
      throw Error(ErrorCode::kInvalidInput, where + ": duplicate record id '" + record.id + "'");
    }
    records.push_back(std::move(record));
    if (end == text.size()) break;
  }
  return records;
}

std::vector<DatasetRecord> load_dataset(const std::filesystem::path& path) {
  return parse_dataset(detail::read_text_file(path), path.string());
}

std::string dataset_to_string(const std::vector<DatasetRecord>& records) {
  std::string out;
  for (const DatasetRecord& record : records) {
    json node{{"id", record.id}, {"instruction", record.instruction}, {"exemplars", json::array()}};
    for (const Exemplar& ex : record.exemplars) node["exemplars"].push_back({{"x", ex.x}, {"y", ex.y}});
    if (record.split) node["split"] = *record.split;
    out += node.dump() + "\n";
  }
  return out;
}

RecordSplit split_records(const std::vector<DatasetRecord>& records,
                          std::size_t shadow_size, std::uint64_t seed) {
  if (shadow_size >= records.size() && !(shadow_size == 0 && !records.empty())) {
    throw Error(ErrorCode::kInvalidInput,
                "shadow size " + std::to_string(shadow_size) + " leaves no targets among " +
                    std::to_string(records.size()) + " records");
  }
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed, 3);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng.uniform_below(i)]);
  }
  std::vector<bool> in_shadow(records.size(), false);
  for (std::size_t i = 0; i < shadow_size; ++i) in_shadow[order[i]] = true;
  RecordSplit split;
  for (std::size_t i = 0; i < records.size(); ++i) {
    (in_shadow[i] ? split.shadow : split.targets).push_back(records[i]);
  }
  return split;
}

RecordSplit choose_split(const std::vector<DatasetRecord>& records,
                         std::size_t shadow_size, std::uint64_t seed) {
  const bool labelled =
      !records.empty() &&
      std::all_of(records.begin(), records.end(), [](const DatasetRecord& r) { return r.split.has_value(); });
  if (!labelled) return split_records(records, shadow_size, seed);
  RecordSplit split;
  for (const DatasetRecord& record : records) {
    (*record.split == "shadow" ? split.shadow : split.targets).push_back(record);
  }
  if (split.targets.empty()) throw Error(ErrorCode::kInvalidInput, "dataset has no target records");
  return split;
}

ShadowDataset make_shadow(const std::vector<DatasetRecord>& records, const Vocabulary& vocab) {
  ShadowDataset shadow;
  for (const DatasetRecord& record : records) {
    shadow.prompts.push_back(vocab.encode(record.prompt_text()));
    shadow.sources.push_back(record.id);
  }
  return shadow;
}

ShadowTargetSplit split_shadow_target(const std::vector<DatasetRecord>& records,
                                      std::size_t shadow_size, std::uint64_t seed,
                                      const Vocabulary& vocab) {
  RecordSplit split = split_records(records, shadow_size, seed);
  return {make_shadow(split.shadow, vocab), std::move(split.targets)};
}

std::vector<std::string> load_corpus_lines(const std::filesystem::path& path) {
  std::vector<std::string> lines;
  if (path.extension() == ".jsonl") {
    for (const DatasetRecord& record : load_dataset(path)) lines.push_back(record.prompt_text());
    return lines;
  }
  const std::string text = detail::read_text_file(path);
  std::size_t start = 0;
  while (start < text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    std::string line = text.substr(start, end - start);
    if (!normalize_whitespace(line).empty()) lines.push_back(std::move(line));
    start = end + 1;
  }
  return lines;
}

TrainSettings parse_train_settings(std::string_view json_text) {
  try {
    const json doc = json::parse(json_text);
    TrainSettings s;
    TrainConfig& c = s.train;
    c.epochs = doc.value("epochs", c.epochs);
    c.learning_rate = doc.value("learning_rate", c.learning_rate);
    c.embed_scale = doc.value("embed_scale", c.embed_scale);
    c.dims.embed_dim = doc.value("embed_dim", c.dims.embed_dim);
    c.dims.context = doc.value("context", c.dims.context);
    c.dims.hidden = doc.value("hidden", c.dims.hidden);
    s.vocab_cap = doc.value("vocab_cap", s.vocab_cap);
    return s;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed training config: ") + e.what());
  }
}

TrainSettings load_train_settings(const std::filesystem::path& path) {
  return parse_train_settings(detail::read_text_file(path));
}

TrainedCheckpoint train_checkpoint(const std::vector<std::string>& lines,
                                   const TrainSettings& settings, std::uint64_t seed) {
  if (lines.empty()) throw Error(ErrorCode::kEmptyInput, "training corpus is empty");
  const Vocabulary vocab = Vocabulary::build(lines, settings.vocab_cap);
  std::vector<TokenSequence> corpus;
  for (const std::string& line : lines) corpus.push_back(vocab.encode(line));
  TrainConfig config = settings.train;
  config.seed = seed;
  TrainResult result = train_lm(vocab, corpus, config);
  return {Checkpoint{std::move(result.model), seed, fingerprint_sequences(corpus)},
          std::move(result.epoch_losses)};
}

}  // namespace promptleak
