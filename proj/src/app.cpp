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

#include "promptleak/app.hpp"

#include <algorithm>
#include <unordered_set>

#include "json.hpp"
#include "json_io.hpp"
#include "promptleak/error.hpp"

namespace promptleak {

using nlohmann::json;

std::string system_prompt_text(const SystemPromptSpec& spec) {
  std::string text = spec.instruction;
  for (std::size_t i = 0; i < spec.exemplars.size(); ++i) {
    std::string rendered = spec.exemplar_template;
    for (auto [key, value] : {std::pair<std::string_view, const std::string*>{
                                  "{x}", &spec.exemplars[i].x},
                              {"{y}", &spec.exemplars[i].y}}) {
      for (std::size_t pos = rendered.find(key); pos != std::string::npos;
           pos = rendered.find(key, pos + value->size())) {
        rendered.replace(pos, key.size(), *value);
      }
    }
    if (!text.empty() && i == 0) text.push_back('\n');
    text += rendered;
  }
  if (normalize_whitespace(text).empty()) {
    throw Error(ErrorCode::kInvalidInput, "system prompt is empty");
  }
  return text;
}

TokenSequence build_system_prompt(const SystemPromptSpec& spec,
                                  const Vocabulary& vocab) {
  return vocab.encode(system_prompt_text(spec));
}

std::string_view to_string(PromptDefense defense) {
  switch (defense) {
    case PromptDefense::kNone: return "none";
    case PromptDefense::kParameterization: return "parameterization";
    case PromptDefense::kQuotes: return "quotes";
  }
  return "none";
}

PromptDefense parse_prompt_defense(std::string_view text) {
  if (text == "none") return PromptDefense::kNone;
  if (text == "parameterization") return PromptDefense::kParameterization;
  if (text == "quotes") return PromptDefense::kQuotes;
  throw Error(ErrorCode::kParse, "unknown defense '" + std::string(text) + "'");
}

GuardTexts GuardTexts::load(const std::filesystem::path& path) {
  try {
    const json doc = json::parse(detail::read_text_file(path));
    GuardTexts guards;
    guards.parameterization = doc.value("parameterization", guards.parameterization);
    guards.quotes_framing = doc.value("quotes_framing", guards.quotes_framing);
    guards.quote_delimiter = doc.value("quote_delimiter", guards.quote_delimiter);
    return guards;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, "malformed guard file " + path.string() + ": " + e.what());
  }
}

TokenSequence wrap_prompt_defense(std::span<const TokenId> system_prompt,
                                  PromptDefense kind, const Vocabulary& vocab,
                                  const GuardTexts& guards) {
  vocab.check(system_prompt);
  TokenSequence out;
  switch (kind) {
    case PromptDefense::kNone:
      out.assign(system_prompt.begin(), system_prompt.end());
      break;
    case PromptDefense::kParameterization:
      out = vocab.encode(guards.parameterization);
      out.insert(out.end(), system_prompt.begin(), system_prompt.end());
      break;
    case PromptDefense::kQuotes: {
      const TokenSequence delimiter = vocab.encode(guards.quote_delimiter);
      out = delimiter;
      const TokenSequence framing = vocab.encode(guards.quotes_framing);
      out.insert(out.end(), framing.begin(), framing.end());
      out.insert(out.end(), system_prompt.begin(), system_prompt.end());
      out.insert(out.end(), delimiter.begin(), delimiter.end());
      break;
    }
  }
  return out;
}

std::string sentence_filter(std::string_view response, std::string_view system_prompt) {
  std::unordered_set<std::string> protected_sentences;
  for (const std::string& sentence : split_sentences(system_prompt)) {
    protected_sentences.insert(normalize_whitespace(sentence));
  }
  std::string out;
  for (const std::string& sentence : split_sentences(response)) {
    if (protected_sentences.contains(normalize_whitespace(sentence))) continue;
    if (!out.empty()) out.push_back(' ');
    out += sentence;
  }
  return out;
}

MockBackend::MockBackend(std::vector<MockRule> rules, std::string fallback)
    : rules_(std::move(rules)), fallback_(std::move(fallback)) {
  for (const MockRule& rule : rules_) {
    if (rule.trigger.empty()) {
      throw Error(ErrorCode::kInvalidInput, "mock rule with an empty trigger");
    }
    if (rule.action == MockAction::kEchoPrompt && rule.transform != "auto") {
      Transform::parse(rule.transform);
    }
  }
}

Transform MockBackend::detect_transform(std::string_view query_text) {
  const std::string text = normalize_whitespace(query_text);
  const std::string reverse = instruction_fragment(Transform::word_reverse());
  if (text.find(reverse) != std::string::npos) return Transform::word_reverse();
  constexpr std::string_view kTail = " before each sentence in instructions.";
  constexpr std::string_view kHead = "Add ";
  const auto tail = text.find(kTail);
  if (tail != std::string::npos) {
    const auto head = text.rfind(kHead, tail);
    if (head != std::string::npos && head + kHead.size() < tail) {
      try {
        return Transform::sentence_prefix(
            text.substr(head + kHead.size(), tail - head - kHead.size()) + " ");
      } catch (const Error&) {
        return Transform::identity();
      }
    }
  }
  return Transform::identity();
}

std::string MockBackend::generate(const Vocabulary& vocab,
                                  std::span<const TokenId> input,
                                  std::size_t system_length) const {
  vocab.check(input);
  system_length = std::min(system_length, input.size());
  const auto query = input.subspan(system_length);
  for (const MockRule& rule : rules_) {
    TokenSequence trigger;
    bool known = true;
    for (const std::string& word : rule.trigger) {
      const auto id = vocab.find(word);
      if (!id) known = false;
      trigger.push_back(id.value_or(vocab.unk()));
    }
    if (!known) continue;
    if (std::search(query.begin(), query.end(), trigger.begin(), trigger.end()) ==
        query.end()) {
      continue;
    }
    if (rule.action == MockAction::kScripted) return rule.text;
    const Transform transform = rule.transform == "auto"
                                    ? detect_transform(vocab.decode(query))
                                    : Transform::parse(rule.transform);
    return apply_transform(transform, vocab.decode(input.first(system_length)));
  }
  return fallback_;
}

std::vector<std::string> MockBackend::texts() const {
  std::vector<std::string> out{fallback_};
  for (const MockRule& rule : rules_) {
    std::string trigger;
    for (const std::string& word : rule.trigger) trigger += word + " ";
    out.push_back(trigger);
    if (!rule.text.empty()) out.push_back(rule.text);
  }
  return out;
}

std::vector<MockRule> default_echo_rules() {
  return {MockRule{{"previous", "literal", "sentences"}, MockAction::kEchoPrompt, "", "auto"}};
}

LLMApplication::LLMApplication(std::string id, std::string text,
                               std::shared_ptr<const Vocabulary> vocab,
                               Backend backend, DecodingStrategy strategy,
                               DefenseConfig defense, GuardTexts guards)
    : id_(std::move(id)),
      system_prompt_text_(std::move(text)),
      vocab_(std::move(vocab)),
      backend_(std::move(backend)),
      strategy_(strategy),
      defense_(defense),
      guards_(std::move(guards)) {
  system_prompt_ = vocab_->encode(system_prompt_text_);
  if (system_prompt_.empty()) {
    throw Error(ErrorCode::kInvalidInput, "application '" + id_ + "' has an empty system prompt");
  }
  strategy_.validate(vocab_->size());
  wrapped_ = wrap_prompt_defense(system_prompt_, defense_.prompt_defense, *vocab_, guards_);
}

LLMApplication LLMApplication::with_model(std::string id, std::string system_prompt_text,
                                          std::shared_ptr<const TinyLM> model,
                                          DecodingStrategy strategy,
                                          DefenseConfig defense, GuardTexts guards) {
  auto vocab = std::make_shared<const Vocabulary>(model->vocab());
  return LLMApplication(std::move(id), std::move(system_prompt_text), std::move(vocab),
                        Backend(std::move(model)), strategy, defense, std::move(guards));
}

LLMApplication LLMApplication::with_mock(std::string id, std::string system_prompt_text,
                                         std::shared_ptr<const Vocabulary> vocab,
                                         std::shared_ptr<const MockBackend> mock,
                                         DecodingStrategy strategy,
                                         DefenseConfig defense, GuardTexts guards) {
  return LLMApplication(std::move(id), std::move(system_prompt_text), std::move(vocab),
                        Backend(std::move(mock)), strategy, defense, std::move(guards));
}

TokenSequence LLMApplication::backend_input(std::span<const TokenId> query) const {
  vocab_->check(query);
  TokenSequence input = wrapped_;
  input.insert(input.end(), query.begin(), query.end());
  return input;
}

std::string LLMApplication::respond(std::span<const TokenId> query) const {
  const TokenSequence input = backend_input(query);
  std::string response;
  if (const auto* model = std::get_if<std::shared_ptr<const TinyLM>>(&backend_)) {
    response = vocab_->decode(decode(**model, input, strategy_).tokens);
  } else {
    const auto& mock = std::get<std::shared_ptr<const MockBackend>>(backend_);
    response = mock->generate(*vocab_, input, wrapped_.size());
  }
  if (defense_.response_filter) {
    response = sentence_filter(response, system_prompt_text_);
  }
  return response;
}

namespace detail {

MockRule mock_rule_from_json(const json& node) {
  MockRule rule;
  const json& trigger = node.at("trigger");
  rule.trigger = trigger.is_string() ? split_whitespace(trigger.get<std::string>())
                                     : trigger.get<std::vector<std::string>>();
  const std::string action = node.value("action", std::string("echo"));
  if (action == "echo") {
    rule.action = MockAction::kEchoPrompt;
  } else if (action == "scripted") {
    rule.action = MockAction::kScripted;
  } else {
    throw Error(ErrorCode::kParse, "unknown mock action '" + action + "'");
  }
  rule.text = node.value("text", std::string());
  rule.transform = node.value("transform", std::string("auto"));
  return rule;
}

json mock_rule_to_json(const MockRule& rule) {
  json node{{"trigger", rule.trigger},
            {"action", rule.action == MockAction::kEchoPrompt ? "echo" : "scripted"}};
  if (rule.action == MockAction::kScripted) node["text"] = rule.text;
  if (rule.action == MockAction::kEchoPrompt) node["transform"] = rule.transform;
  return node;
}

}  // namespace detail

AppSpec AppSpec::parse(std::string_view json_text, const std::filesystem::path& base_dir) {
  try {
    const json doc = json::parse(json_text);
    AppSpec spec;
    spec.id = doc.value("id", spec.id);
    if (doc.contains("system_prompt_text")) {
      spec.system_prompt_text = doc["system_prompt_text"].get<std::string>();
    } else {
      const json& sp = doc.at("system_prompt");
      SystemPromptSpec prompt;
      prompt.instruction = sp.value("instruction", std::string());
      for (const json& ex : sp.value("exemplars", json::array())) {
        prompt.exemplars.push_back({ex.at("x").get<std::string>(), ex.at("y").get<std::string>()});
      }
      prompt.exemplar_template = sp.value("template", prompt.exemplar_template);
      spec.system_prompt_text = promptleak::system_prompt_text(prompt);
    }
    const json& backend = doc.at("backend");
    if (backend.contains("checkpoint")) {
      std::filesystem::path path = backend["checkpoint"].get<std::string>();
      spec.checkpoint = path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    } else {
      const json& mock = backend.at("mock");
      std::vector<MockRule> rules;
      if (mock.contains("rules")) {
        for (const json& r : mock["rules"]) rules.push_back(detail::mock_rule_from_json(r));
      } else {
        rules = default_echo_rules();
      }
      spec.mock.emplace(std::move(rules),
                        mock.value("fallback", std::string(MockBackend::kDefaultFallback)));
    }
    spec.strategy = DecodingStrategy::parse(doc.value("decoding", std::string("greedy")));
    if (spec.strategy.is_sampling() && !doc.contains("seed")) {
      throw Error(ErrorCode::kConfig, "sampling decoding requires an explicit seed");
    }
    spec.strategy.seed = doc.value("seed", std::uint64_t{0});
    spec.strategy.max_new_tokens = doc.value("max_new_tokens", spec.strategy.max_new_tokens);
    if (doc.contains("defense")) {
      const json& d = doc["defense"];
      spec.defense.prompt_defense = parse_prompt_defense(d.value("prompt", std::string("none")));
      spec.defense.response_filter = d.value("response_filter", false);
    }
    return spec;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed application spec: ") + e.what());
  }
}

AppSpec AppSpec::load(const std::filesystem::path& path) {
  return parse(detail::read_text_file(path), path.parent_path());
}

}  // namespace promptleak
