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

#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <thread>

#include "json.hpp"
#include "json_io.hpp"
#include "promptleak/checkpoint.hpp"
#include "promptleak/error.hpp"
#include "promptleak/harness.hpp"

namespace promptleak {

using nlohmann::json;

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path path = value;
  return path.is_relative() && !base.empty() ? base / path : path;
}

template <typename Fn>
auto in_stage(const std::string& stage, const std::string& record, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const StageError&) {
    throw;
  } catch (const Error& e) {
    throw StageError(e.code(), stage, record, e.what());
  } catch (const std::exception& e) {
    throw StageError(ErrorCode::kInvalidInput, stage, record, e.what());
  }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

MetricStat stat(const std::vector<double>& values) {
  MetricStat s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

std::shared_ptr<const Vocabulary> mock_vocabulary(
    const std::vector<const std::vector<DatasetRecord>*>& datasets,
    const std::vector<const ExperimentConfig*>& configs, const GuardTexts& guards) {
  std::vector<std::string> texts;
  for (const auto* records : datasets) {
    for (const DatasetRecord& record : *records) texts.push_back(record.prompt_text());
  }
  for (const ExperimentConfig* config : configs) {
    if (config->mock) {
      MockBackend backend(config->mock->rules, config->mock->fallback);
      for (std::string& text : backend.texts()) texts.push_back(std::move(text));
    }
    texts.push_back(config->attack.human_text);
    texts.push_back(instruction_fragment(Transform::parse(config->transform_id)));
  }
  texts.push_back(guards.parameterization);
  texts.push_back(guards.quotes_framing);
  texts.push_back(guards.quote_delimiter);
  return std::make_shared<const Vocabulary>(
      Vocabulary::build(texts, std::numeric_limits<std::size_t>::max()));
}

template <typename Fn>
void parallel_for(std::size_t count, std::size_t workers, Fn&& fn) {
  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto loop = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    loop();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(loop);
  }
  for (const std::exception_ptr& error : errors) {
    if (error) std::rethrow_exception(error);
  }
}

// Mock attackers have no model; their AQs are the initialization itself.
std::vector<AdversarialQuery> attack_queries(const ExperimentConfig& c, const TinyLM* model,
                                             const std::vector<DatasetRecord>& shadow_records,
                                             const Vocabulary& vocab) {
  AttackConfig config = c.attack;
  config.seed = c.master_seed();
  if (model) {
    const ShadowDataset shadow = make_shadow(shadow_records, vocab);
    shadow.validate();
    return generate_aq_batch(*model, shadow.prompts, config);
  }
  config.validate(vocab.size());
  std::vector<AdversarialQuery> out;
  for (std::size_t i = 0; i < config.n_queries; ++i) {
    out.push_back(initialize_aq(vocab, config.init_mode, config.aq_length, config.seed + i,
                                config.filter,
                                config.init_mode == InitMode::kRandom
                                    ? std::nullopt
                                    : std::optional<std::string_view>(config.human_text)));
  }
  return out;
}

ExperimentReport execute(const ExperimentConfig& a, const ExperimentConfig& b) {
  const auto start = std::chrono::steady_clock::now();
  ExperimentReport report;
  in_stage("config", "", [&] {
    a.validate();
    b.validate();
  });
  report.config_json = experiment_config_to_json(a);
  report.target_config_json = experiment_config_to_json(b);
  report.seed = a.master_seed();

  const bool same_dataset = a.dataset == b.dataset;
  const auto records_a = in_stage("dataset", "", [&] { return load_dataset(a.dataset); });
  const auto records_b =
      same_dataset ? records_a : in_stage("dataset", "", [&] { return load_dataset(b.dataset); });

  const RecordSplit split_a = in_stage("split", "", [&] {
    return choose_split(records_a, a.shadow_size, a.master_seed());
  });
  const bool same_split =
      same_dataset && a.shadow_size == b.shadow_size && a.master_seed() == b.master_seed();
  std::vector<DatasetRecord> targets =
      same_split ? split_a.targets : in_stage("split", "", [&] {
        return choose_split(records_b, b.shadow_size, b.master_seed()).targets;
      });
  if (b.target_size > 0 && b.target_size < targets.size()) targets.resize(b.target_size);

  std::shared_ptr<const TinyLM> model_a;
  std::shared_ptr<const TinyLM> model_b;
  GuardTexts guards;
  std::shared_ptr<const Vocabulary> vocab;
  in_stage("backend", "", [&] {
    if (a.checkpoint) model_a = std::make_shared<const TinyLM>(load_checkpoint(*a.checkpoint).model);
    if (b.checkpoint) {
      model_b = a.checkpoint && *a.checkpoint == *b.checkpoint
                    ? model_a
                    : std::make_shared<const TinyLM>(load_checkpoint(*b.checkpoint).model);
    }
    if (b.guards) guards = GuardTexts::load(*b.guards);
    if (model_a && model_b && !(model_a->vocab() == model_b->vocab())) {
      throw Error(ErrorCode::kVocabularyMismatch,
                  "shadow and target models use different vocabularies; token ids do not transfer");
    }
    if (model_b) {
      vocab = std::make_shared<const Vocabulary>(model_b->vocab());
    } else if (model_a) {
      vocab = std::make_shared<const Vocabulary>(model_a->vocab());
    } else {
      vocab = mock_vocabulary({&records_a, &records_b}, {&a, &b}, guards);
    }
  });
  const std::string vocab_fingerprint = fingerprint_bytes([&] {
    std::string joined;
    for (const std::string& token : vocab->tokens()) joined += token + "\n";
    return joined;
  }());
  report.shadow_fingerprint = model_a ? model_fingerprint(*model_a) : "mock:" + vocab_fingerprint;
  report.target_fingerprint = model_b ? model_fingerprint(*model_b) : "mock:" + vocab_fingerprint;

  // Phase 1: adversarial queries.
  const auto attack_start = std::chrono::steady_clock::now();
  const Transform transform = Transform::parse(a.transform_id);
  std::vector<AdversarialQuery> queries =
      in_stage("attack", "", [&] { return attack_queries(a, model_a.get(), split_a.shadow, *vocab); });
  report.timings.attack_seconds = seconds_since(attack_start);

  const TokenSequence fragment = vocab->encode(instruction_fragment(transform));
  std::vector<TokenSequence> sent;
  for (AdversarialQuery& aq : queries) {
    aq.transform_id = transform.id();
    ReportAq entry;
    for (TokenId id : aq.tokens) entry.tokens.push_back(vocab->token(id));
    entry.transform_id = aq.transform_id;
    entry.seed = aq.seed;
    entry.final_loss = aq.loss_trace.empty() ? std::numeric_limits<double>::quiet_NaN()
                                             : aq.loss_trace.back().loss;
    report.aqs.push_back(std::move(entry));
    TokenSequence query = aq.tokens;
    query.insert(query.end(), fragment.begin(), fragment.end());
    sent.push_back(std::move(query));
  }

  // Phase 2: query every target application, reconstruct and score.
  const auto evaluate_start = std::chrono::steady_clock::now();
  const Embedder embedder = model_a   ? Embedder::from_model(*model_a)
                            : model_b ? Embedder::from_model(*model_b)
                                      : Embedder::random(*vocab, 32, a.master_seed());
  std::shared_ptr<const MockBackend> mock;
  if (!model_b) {
    const MockConfig config = b.mock.value_or(MockConfig{});
    mock = std::make_shared<const MockBackend>(config.rules, config.fallback);
  }
  DecodingStrategy strategy = b.decoding;
  strategy.seed = b.master_seed();

  report.targets.resize(targets.size());
  parallel_for(targets.size(), b.workers, [&](std::size_t index) {
    const DatasetRecord& record = targets[index];
    TargetResult& result = report.targets[index];
    result.app_id = record.id;
    result.target_text = record.prompt_text();
    const LLMApplication app = in_stage("respond", record.id, [&] {
      return model_b ? LLMApplication::with_model(record.id, result.target_text, model_b,
                                                  strategy, b.defense, guards)
                     : LLMApplication::with_mock(record.id, result.target_text, vocab, mock,
                                                 strategy, b.defense, guards);
    });
    std::vector<std::string> responses;
    for (const TokenSequence& query : sent) {
      responses.push_back(in_stage("respond", record.id, [&] { return app.respond(query); }));
    }
    const ReconstructionResult reconstruction =
        in_stage("reconstruct", record.id, [&] { return post_process(responses, transform); });
    in_stage("score", record.id, [&] {
      std::vector<MetricReport> all;
      for (std::size_t i = 0; i < responses.size(); ++i) {
        AqRow row;
        row.aq_index = i;
        row.response = responses[i];
        row.inverted = reconstruction.inverted[i];
        row.metrics = score(result.target_text, row.inverted, embedder);
        all.push_back(row.metrics);
        result.rows.push_back(std::move(row));
      }
      result.reconstruction = reconstruction.reconstruction;
      result.reconstruction_metrics = score(result.target_text, result.reconstruction, embedder);
      all.push_back(result.reconstruction_metrics);
      result.best = aggregate(all);
      result.best.per_aq.clear();
    });
  });
  report.summary = summarize(report.targets);
  report.timings.evaluate_seconds = seconds_since(evaluate_start);
  report.timings.total_seconds = seconds_since(start);
  return report;
}

json backend_to_json(const ExperimentConfig& config) {
  if (config.checkpoint) return json{{"checkpoint", config.checkpoint->string()}};
  json mock{{"fallback", config.mock->fallback}, {"rules", json::array()}};
  for (const MockRule& rule : config.mock->rules) mock["rules"].push_back(detail::mock_rule_to_json(rule));
  return json{{"mock", mock}};
}

}  // namespace

void ExperimentConfig::validate() const {
  if (!seed) throw Error(ErrorCode::kConfig, "experiments need an explicit seed");
  if (dataset.empty()) throw Error(ErrorCode::kConfig, "no dataset given");
  if (!std::filesystem::exists(dataset)) {
    throw Error(ErrorCode::kConfig, "dataset " + dataset.string() + " does not exist");
  }
  if (checkpoint.has_value() == mock.has_value()) {
    throw Error(ErrorCode::kConfig, "exactly one of a checkpoint or a mock backend is required");
  }
  if (checkpoint && !std::filesystem::exists(*checkpoint)) {
    throw Error(ErrorCode::kConfig, "checkpoint " + checkpoint->string() + " does not exist");
  }
  if (guards && !std::filesystem::exists(*guards)) {
    throw Error(ErrorCode::kConfig, "guard file " + guards->string() + " does not exist");
  }
  Transform::parse(transform_id);
  if (attack.n_queries < 1) throw Error(ErrorCode::kConfig, "n_queries must be >= 1");
}

std::uint64_t ExperimentConfig::master_seed() const {
  if (!seed) throw Error(ErrorCode::kConfig, "experiments need an explicit seed");
  return *seed;
}

ExperimentConfig parse_experiment_config(std::string_view json_text,
                                         const std::filesystem::path& base_dir) {
  try {
    const json doc = json::parse(json_text);
    ExperimentConfig config;
    if (doc.contains("dataset")) config.dataset = resolve(base_dir, doc["dataset"].get<std::string>());
    if (doc.contains("backend")) {
      const json& backend = doc["backend"];
      if (backend.contains("checkpoint")) {
        config.checkpoint = resolve(base_dir, backend["checkpoint"].get<std::string>());
      }
      if (backend.contains("mock")) {
        const json& node = backend["mock"];
        MockConfig mock;
        if (node.contains("rules")) {
          mock.rules.clear();
          for (const json& rule : node["rules"]) mock.rules.push_back(detail::mock_rule_from_json(rule));
        }
        mock.fallback = node.value("fallback", mock.fallback);
        config.mock = std::move(mock);
      }
    }
    if (doc.contains("guards")) config.guards = resolve(base_dir, doc["guards"].get<std::string>());
    if (doc.contains("out")) config.out = resolve(base_dir, doc["out"].get<std::string>());
    config.shadow_size = doc.value("shadow_size", config.shadow_size);
    config.target_size = doc.value("target_size", config.target_size);
    if (doc.contains("attack")) detail::attack_config_from_json(doc["attack"], config.attack);
    if (doc.contains("decoding")) {
      config.decoding = DecodingStrategy::parse(doc["decoding"].get<std::string>());
    }
    config.decoding.max_new_tokens = doc.value("max_new_tokens", config.decoding.max_new_tokens);
    if (doc.contains("defense")) {
      const json& d = doc["defense"];
      config.defense.prompt_defense = parse_prompt_defense(d.value("prompt", std::string("none")));
      config.defense.response_filter = d.value("response_filter", false);
    }
    config.transform_id = doc.value("transform", config.transform_id);
    if (doc.contains("seed")) config.seed = doc["seed"].get<std::uint64_t>();
    config.workers = doc.value("workers", config.workers);
    return config;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed experiment config: ") + e.what());
  }
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(detail::read_text_file(path), path.parent_path());
}

std::string experiment_config_to_json(const ExperimentConfig& config) {
  json doc{{"dataset", config.dataset.string()},
           {"shadow_size", config.shadow_size},
           {"target_size", config.target_size},
           {"attack", detail::attack_config_to_json(config.attack)},
           {"decoding", config.decoding.to_string()},
           {"max_new_tokens", config.decoding.max_new_tokens},
           {"defense",
            {{"prompt", to_string(config.defense.prompt_defense)},
             {"response_filter", config.defense.response_filter}}},
           {"transform", config.transform_id}};
  if (config.checkpoint || config.mock) doc["backend"] = backend_to_json(config);
  if (config.guards) doc["guards"] = config.guards->string();
  if (!config.out.empty()) doc["out"] = config.out.string();
  if (config.seed) doc["seed"] = *config.seed;
  // Worker count never changes results, so it stays out of the snapshot.
  return doc.dump(2);
}

ReportSummary summarize(const std::vector<TargetResult>& targets) {
  std::vector<double> sm, em, eed_values, ss_values;
  for (const TargetResult& target : targets) {
    sm.push_back(target.best.sm);
    em.push_back(target.best.em);
    eed_values.push_back(target.best.eed);
    ss_values.push_back(target.best.ss);
  }
  return {stat(sm), stat(em), stat(eed_values), stat(ss_values)};
}

AttackOutput run_attack(const ExperimentConfig& config) {
  in_stage("config", "", [&] { config.validate(); });
  const auto records = in_stage("dataset", "", [&] { return load_dataset(config.dataset); });
  const RecordSplit split = in_stage("split", "", [&] {
    return choose_split(records, config.shadow_size, config.master_seed());
  });
  AttackOutput output;
  std::shared_ptr<const TinyLM> model;
  in_stage("backend", "", [&] {
    if (config.checkpoint) {
      model = std::make_shared<const TinyLM>(load_checkpoint(*config.checkpoint).model);
      output.vocab = std::make_shared<const Vocabulary>(model->vocab());
    } else {
      const GuardTexts guards = config.guards ? GuardTexts::load(*config.guards) : GuardTexts{};
      output.vocab = mock_vocabulary({&records}, {&config}, guards);
    }
  });
  output.queries = in_stage("attack", "", [&] {
    return attack_queries(config, model.get(), split.shadow, *output.vocab);
  });
  const std::string transform_id = Transform::parse(config.transform_id).id();
  for (AdversarialQuery& aq : output.queries) aq.transform_id = transform_id;
  return output;
}

ExperimentReport run_experiment(const ExperimentConfig& config) {
  return execute(config, config);
}

ExperimentReport transfer_experiment(const ExperimentConfig& attacker,
                                     const ExperimentConfig& target) {
  return execute(attacker, target);
}

}  // namespace promptleak
