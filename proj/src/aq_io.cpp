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

#include <fstream>
#include <sstream>

#include "json_io.hpp"
#include "promptleak/attack.hpp"
#include "promptleak/error.hpp"

namespace promptleak {

using nlohmann::json;

namespace detail {

json attack_config_to_json(const AttackConfig& config) {
  return json{{"aq_length", config.aq_length},
              {"step_size", config.step_size},
              {"top_k", config.top_k},
              {"n_queries", config.n_queries},
              {"init_mode", to_string(config.init_mode)},
              {"human_text", config.human_text},
              {"token_filter", to_string(config.filter)},
              {"seed", config.seed}};
}

void attack_config_from_json(const json& node, AttackConfig& config) {
  if (node.contains("aq_length")) config.aq_length = node["aq_length"].get<std::size_t>();
  if (node.contains("step_size")) config.step_size = node["step_size"].get<std::size_t>();
  if (node.contains("top_k")) config.top_k = node["top_k"].get<std::size_t>();
  if (node.contains("n_queries")) config.n_queries = node["n_queries"].get<std::size_t>();
  if (node.contains("init_mode")) {
    config.init_mode = parse_init_mode(node["init_mode"].get<std::string>());
  }
  if (node.contains("human_text")) config.human_text = node["human_text"].get<std::string>();
  if (node.contains("token_filter")) {
    config.filter = parse_filter_policy(node["token_filter"].get<std::string>());
  }
  if (node.contains("seed")) config.seed = node["seed"].get<std::uint64_t>();
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

}  // namespace detail

std::string aq_artifact_to_string(std::span<const AdversarialQuery> queries,
                                  const Vocabulary& vocab,
                                  const AttackConfig& config) {
  json doc;
  doc["format_version"] = 1;
  doc["config"] = detail::attack_config_to_json(config);
  doc["queries"] = json::array();
  for (const AdversarialQuery& aq : queries) {
    json trace = json::array();
    for (const LossPoint& point : aq.loss_trace) trace.push_back({point.t, point.loss});
    std::vector<std::string> strings;
    for (TokenId id : aq.tokens) strings.push_back(vocab.token(id));
    doc["queries"].push_back({{"aq_tokens", strings},
                              {"aq_token_ids", aq.tokens},
                              {"init_mode", to_string(aq.init_mode)},
                              {"transform_id", aq.transform_id},
                              {"seed", aq.seed},
                              {"replacements", aq.replacements},
                              {"loss_trace", trace}});
  }
  return doc.dump(2) + "\n";
}

AqArtifact aq_artifact_from_string(std::string_view text) {
  try {
    const json doc = json::parse(text);
    AqArtifact artifact;
    detail::attack_config_from_json(doc.at("config"), artifact.config);
    for (const json& node : doc.at("queries")) {
      AdversarialQuery aq;
      aq.tokens = node.at("aq_token_ids").get<TokenSequence>();
      aq.init_mode = parse_init_mode(node.at("init_mode").get<std::string>());
      aq.transform_id = node.at("transform_id").get<std::string>();
      aq.seed = node.at("seed").get<std::uint64_t>();
      aq.replacements = node.value("replacements", std::size_t{0});
      for (const json& point : node.at("loss_trace")) {
        aq.loss_trace.push_back({point.at(0).get<std::size_t>(), point.at(1).get<double>()});
      }
      auto strings = node.at("aq_tokens").get<std::vector<std::string>>();
      if (strings.size() != aq.tokens.size()) {
        throw Error(ErrorCode::kParse, "aq_tokens and aq_token_ids differ in length");
      }
      artifact.token_strings.push_back(std::move(strings));
      artifact.queries.push_back(std::move(aq));
    }
    return artifact;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed AQ artifact: ") + e.what());
  }
}

void save_aq_artifact(const std::filesystem::path& path,
                      std::span<const AdversarialQuery> queries,
                      const Vocabulary& vocab, const AttackConfig& config) {
  detail::write_text_file(path, aq_artifact_to_string(queries, vocab, config));
}

AqArtifact load_aq_artifact(const std::filesystem::path& path) {
  return aq_artifact_from_string(detail::read_text_file(path));
}

std::vector<TokenSequence> remap_queries(const AqArtifact& artifact,
                                         const Vocabulary& vocab) {
  std::vector<TokenSequence> out;
  for (const auto& strings : artifact.token_strings) {
    TokenSequence ids;
    for (const std::string& s : strings) ids.push_back(vocab.find(s).value_or(vocab.unk()));
    out.push_back(std::move(ids));
  }
  return out;
}

}  // namespace promptleak
