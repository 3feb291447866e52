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

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "promptleak/app.hpp"
#include "promptleak/attack.hpp"
#include "promptleak/checkpoint.hpp"
#include "promptleak/error.hpp"
#include "promptleak/evaluator.hpp"
#include "promptleak/harness.hpp"
#include "promptleak/lm.hpp"
#include "promptleak/simd/kernels.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace promptleak;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

void emit(const std::optional<std::string>& out, const std::string& text) {
  if (out) {
    write_file(*out, text);
  } else {
    std::cout << text;
  }
}

// Flags shared by the experiment-shaped subcommands. Unset flags leave the
// config file's values alone.
struct ExperimentFlags {
  std::optional<std::string> config;
  std::optional<std::string> dataset;
  std::optional<std::string> checkpoint;
  std::optional<std::size_t> shadow_size;
  std::optional<std::size_t> aq_length;
  std::optional<std::size_t> step_size;
  std::optional<std::size_t> top_k;
  std::optional<std::size_t> n_queries;
  std::optional<std::string> init_mode;
  std::optional<std::string> human_text;
  std::optional<std::string> transform;
  std::optional<std::string> defense;
  bool response_filter = false;
  std::optional<std::string> decoding;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::size_t> workers;

  void attach(CLI::App* app) {
    app->add_option("--config", config, "experiment config (JSON)");
    app->add_option("--dataset", dataset, "dataset (JSONL)");
    app->add_option("--checkpoint", checkpoint, "language model checkpoint");
    app->add_option("--shadow-size", shadow_size, "shadow set size");
    app->add_option("--aq-length", aq_length, "adversarial query length m");
    app->add_option("--step-size", step_size, "truncation step size s");
    app->add_option("--top-k", top_k, "candidates per position");
    app->add_option("--n-queries", n_queries, "number of adversarial queries");
    app->add_option("--init-mode", init_mode, "random|human|mixed");
    app->add_option("--human-text", human_text, "seed text for human/mixed init");
    app->add_option("--transform", transform, "identity|prefix:<m>|word_reverse");
    app->add_option("--defense", defense, "none|parameterization|quotes");
    app->add_flag("--response-filter", response_filter, "enable the sentence filter");
    app->add_option("--decoding", decoding,
                    "greedy|beam:<b>|topk:<k>|topp:<p>|beamsample:<b>,<p>");
    app->add_option("--seed", seed, "master seed");
    app->add_option("--out", out, "output path");
    app->add_option("--workers", workers, "evaluation threads (0: all cores)");
  }

  ExperimentConfig resolve() const {
    ExperimentConfig c = config ? load_experiment_config(*config) : ExperimentConfig{};
    if (dataset) c.dataset = *dataset;
    if (checkpoint) {
      c.checkpoint = *checkpoint;
      c.mock.reset();
    }
    if (shadow_size) c.shadow_size = *shadow_size;
    if (aq_length) c.attack.aq_length = *aq_length;
    if (step_size) c.attack.step_size = *step_size;
    if (top_k) c.attack.top_k = *top_k;
    if (n_queries) c.attack.n_queries = *n_queries;
    if (init_mode) c.attack.init_mode = parse_init_mode(*init_mode);
    if (human_text) c.attack.human_text = *human_text;
    if (transform) c.transform_id = Transform::parse(*transform).id();
    if (defense) c.defense.prompt_defense = parse_prompt_defense(*defense);
    if (response_filter) c.defense.response_filter = true;
    if (decoding) {
      const std::size_t limit = c.decoding.max_new_tokens;
      c.decoding = DecodingStrategy::parse(*decoding);
      c.decoding.max_new_tokens = limit;
    }
    if (seed) c.seed = *seed;
    if (out) c.out = *out;
    if (workers) c.workers = *workers;
    if (c.decoding.is_sampling() && !c.seed) {
      throw Error(ErrorCode::kConfig, "sampling decoding needs an explicit --seed");
    }
    return c;
  }
};

int train_lm_command(const std::string& dataset, const std::optional<std::string>& config_path,
                     std::uint64_t seed, const std::string& out) {
  const TrainSettings settings = config_path ? load_train_settings(*config_path) : TrainSettings{};
  const TrainedCheckpoint trained = train_checkpoint(load_corpus_lines(dataset), settings, seed);
  save_checkpoint(trained.checkpoint, out);
  std::fprintf(stderr, "trained |V|=%zu, loss %.4f -> %.4f over %zu epochs\n",
               trained.checkpoint.model.vocab_size(), trained.epoch_losses.front(),
               trained.epoch_losses.back(), settings.train.epochs);
  return 0;
}

int attack_command(const ExperimentFlags& flags) {
  const ExperimentConfig config = flags.resolve();
  if (config.out.empty()) throw Error(ErrorCode::kConfig, "attack needs --out");
  const AttackOutput output = run_attack(config);
  AttackConfig attack = config.attack;
  attack.seed = config.master_seed();
  save_aq_artifact(config.out, output.queries, *output.vocab, attack);
  for (const AdversarialQuery& aq : output.queries) {
    std::fprintf(stderr, "aq seed=%llu loss=%s : %s\n", static_cast<unsigned long long>(aq.seed),
                 aq.loss_trace.empty() ? "n/a" : std::to_string(aq.loss_trace.back().loss).c_str(),
                 output.vocab->decode(aq.tokens).c_str());
  }
  return 0;
}

struct LoadedApp {
  std::optional<LLMApplication> app;
  std::shared_ptr<const TinyLM> model;
};

LoadedApp load_app(const fs::path& spec_path, const AqArtifact* artifact, const Transform& transform,
                   const std::optional<std::string>& defense, bool response_filter,
                   const std::optional<std::string>& decoding, std::optional<std::uint64_t> seed) {
  AppSpec spec = AppSpec::load(spec_path);
  if (defense) spec.defense.prompt_defense = parse_prompt_defense(*defense);
  if (response_filter) spec.defense.response_filter = true;
  if (decoding) {
    const std::size_t limit = spec.strategy.max_new_tokens;
    spec.strategy = DecodingStrategy::parse(*decoding);
    spec.strategy.max_new_tokens = limit;
    if (spec.strategy.is_sampling() && !seed) {
      throw Error(ErrorCode::kConfig, "sampling decoding needs an explicit --seed");
    }
  }
  if (seed) spec.strategy.seed = *seed;
  LoadedApp loaded;
  if (spec.checkpoint) {
    loaded.model = std::make_shared<const TinyLM>(load_checkpoint(*spec.checkpoint).model);
    loaded.app = LLMApplication::with_model(spec.id, spec.system_prompt_text, loaded.model,
                                            spec.strategy, spec.defense);
    return loaded;
  }
  const GuardTexts guards;
  std::vector<std::string> texts{spec.system_prompt_text, instruction_fragment(transform),
                                 guards.parameterization, guards.quotes_framing,
                                 guards.quote_delimiter};
  for (std::string& text : spec.mock->texts()) texts.push_back(std::move(text));
  if (artifact) {
    for (const auto& tokens : artifact->token_strings) {
      std::string joined;
      for (const std::string& t : tokens) joined += t + " ";
      texts.push_back(joined);
    }
  }
  auto vocab = std::make_shared<const Vocabulary>(
      Vocabulary::build(texts, std::numeric_limits<std::size_t>::max()));
  loaded.app = LLMApplication::with_mock(spec.id, spec.system_prompt_text, vocab,
                                         std::make_shared<const MockBackend>(*spec.mock),
                                         spec.strategy, spec.defense);
  return loaded;
}

Transform artifact_transform(const AqArtifact& artifact, const std::optional<std::string>& flag) {
  if (flag) return Transform::parse(*flag);
  if (!artifact.queries.empty()) return Transform::parse(artifact.queries.front().transform_id);
  return Transform::identity();
}

int respond_command(const std::string& app_path, const std::string& aq_path,
                    const std::optional<std::string>& transform_flag,
                    const std::optional<std::string>& defense, bool response_filter,
                    const std::optional<std::string>& decoding, std::optional<std::uint64_t> seed,
                    const std::optional<std::string>& out) {
  const AqArtifact artifact = load_aq_artifact(aq_path);
  const Transform transform = artifact_transform(artifact, transform_flag);
  LoadedApp loaded = load_app(app_path, &artifact, transform, defense, response_filter, decoding, seed);
  const LLMApplication& app = *loaded.app;
  const TokenSequence fragment = app.vocab().encode(instruction_fragment(transform));
  json doc{{"app_id", app.id()}, {"transform", transform.id()}, {"responses", json::array()}};
  for (TokenSequence query : remap_queries(artifact, app.vocab())) {
    query.insert(query.end(), fragment.begin(), fragment.end());
    doc["responses"].push_back(app.respond(query));
  }
  emit(out, doc.dump(2) + "\n");
  return 0;
}

struct ResponseFile {
  std::string app_id;
  Transform transform = Transform::identity();
  std::vector<std::string> responses;
};

ResponseFile load_responses(const std::string& path, const std::optional<std::string>& transform) {
  const json doc = json::parse(read_file(path));
  ResponseFile file;
  file.app_id = doc.value("app_id", std::string());
  file.transform = Transform::parse(transform ? *transform : doc.value("transform", std::string("identity")));
  file.responses = doc.at("responses").get<std::vector<std::string>>();
  return file;
}

int reconstruct_command(const std::string& responses_path, const std::optional<std::string>& transform,
                        const std::optional<std::string>& out) {
  const ResponseFile file = load_responses(responses_path, transform);
  const ReconstructionResult result = post_process(file.responses, file.transform);
  json doc{{"app_id", file.app_id},
           {"transform", file.transform.id()},
           {"reconstruction", result.reconstruction},
           {"inverted", result.inverted},
           {"candidates", json::array()}};
  for (const CandidateText& c : result.candidates) {
    doc["candidates"].push_back({{"text", c.text}, {"first", c.first}, {"second", c.second}});
  }
  emit(out, doc.dump(2) + "\n");
  return 0;
}

json metrics_json(const MetricReport& m) {
  return json{{"sm", m.sm}, {"em", m.em}, {"eed", m.eed}, {"ss", m.ss}};
}

int evaluate_command(const std::string& app_path, const std::string& responses_path,
                     const std::optional<std::string>& transform,
                     const std::optional<std::string>& checkpoint, std::uint64_t seed,
                     const std::optional<std::string>& out) {
  const AppSpec spec = AppSpec::load(app_path);
  const ResponseFile file = load_responses(responses_path, transform);
  const ReconstructionResult result = post_process(file.responses, file.transform);
  std::optional<TinyLM> model;
  if (checkpoint) {
    model = load_checkpoint(*checkpoint).model;
  } else if (spec.checkpoint) {
    model = load_checkpoint(*spec.checkpoint).model;
  }
  std::vector<std::string> texts{spec.system_prompt_text};
  texts.insert(texts.end(), result.inverted.begin(), result.inverted.end());
  const Embedder embedder =
      model ? Embedder::from_model(*model)
            : Embedder::random(Vocabulary::build(texts, std::numeric_limits<std::size_t>::max()), 32, seed);
  std::vector<MetricReport> all;
  json rows = json::array();
  for (std::size_t i = 0; i < result.inverted.size(); ++i) {
    all.push_back(score(spec.system_prompt_text, result.inverted[i], embedder));
    json row = metrics_json(all.back());
    row["aq"] = i;
    rows.push_back(row);
  }
  const MetricReport reconstruction = score(spec.system_prompt_text, result.reconstruction, embedder);
  all.push_back(reconstruction);
  const json doc{{"app_id", spec.id},
                 {"reconstruction", result.reconstruction},
                 {"rows", rows},
                 {"reconstruction_metrics", metrics_json(reconstruction)},
                 {"best", metrics_json(aggregate(all))}};
  emit(out, doc.dump(2) + "\n");
  return 0;
}

void write_outputs(const ExperimentReport& report, const fs::path& out) {
  if (out.empty()) {
    std::cout << report_to_string(report, ReportFormat::kStructured);
    return;
  }
  emit_report(report, ReportFormat::kStructured, out / "report.json");
  emit_report(report, ReportFormat::kCsv, out / "report.csv");
  write_timings(report, out / "timings.json");
  const ReportSummary& s = report.summary;
  std::fprintf(stderr, "targets=%zu SM=%.3f EM=%.3f EED=%.3f SS=%.3f (%.1fs) -> %s\n",
               report.targets.size(), s.sm.mean, s.em.mean, s.eed.mean, s.ss.mean,
               report.timings.total_seconds, out.string().c_str());
}

int report_command(const std::string& in, const std::string& format,
                   const std::optional<std::string>& out) {
  const ExperimentReport report = report_from_string(read_file(in));
  if (format == "summary") {
    const ReportSummary& s = report.summary;
    std::ostringstream text;
    text << "targets " << report.targets.size() << "\n";
    for (auto [name, stat] : {std::pair{"sm", s.sm}, {"em", s.em}, {"eed", s.eed}, {"ss", s.ss}}) {
      text << name << " " << stat.mean << " +- " << stat.std << "\n";
    }
    emit(out, text.str());
    return 0;
  }
  emit(out, report_to_string(report, parse_report_format(format)));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Prompt-leaking attack toolkit for tiny language models"};
  cli.require_subcommand(1);
  cli.set_version_flag("--version", std::string(kToolVersion));

  std::string kernels = "auto";
  cli.add_option("--kernels", kernels, "auto|scalar|avx2");

  // train-lm
  auto* train = cli.add_subcommand("train-lm", "train a tiny language model");
  std::string train_dataset, train_out;
  std::optional<std::string> train_config;
  std::uint64_t train_seed = 0;
  train->add_option("--dataset", train_dataset, "JSONL dataset or plain-text corpus")->required();
  train->add_option("--config", train_config, "training config (JSON)");
  train->add_option("--seed", train_seed, "seed")->required();
  train->add_option("--out", train_out, "checkpoint path")->required();

  ExperimentFlags attack_flags, run_flags, transfer_flags;
  auto* attack = cli.add_subcommand("attack", "optimize adversarial queries on a shadow model");
  attack_flags.attach(attack);
  auto* run = cli.add_subcommand("run", "full pipeline: attack, respond, reconstruct, score");
  run_flags.attach(run);
  auto* transfer = cli.add_subcommand("transfer", "evaluate AQs from one setup on another");
  transfer_flags.attach(transfer);
  std::string target_config;
  transfer->add_option("--target-config", target_config, "target-side experiment config")->required();

  // respond / reconstruct / evaluate
  std::string app_path, aq_path, responses_path;
  std::optional<std::string> transform, defense, decoding, out, checkpoint;
  std::optional<std::uint64_t> seed;
  bool response_filter = false;
  auto* respond = cli.add_subcommand("respond", "query an application with stored AQs");
  respond->add_option("--config", app_path, "application spec (JSON)")->required();
  respond->add_option("--aq", aq_path, "AQ artifact")->required();
  respond->add_option("--transform", transform);
  respond->add_option("--defense", defense);
  respond->add_flag("--response-filter", response_filter);
  respond->add_option("--decoding", decoding);
  respond->add_option("--seed", seed);
  respond->add_option("--out", out);

  auto* reconstruct = cli.add_subcommand("reconstruct", "rebuild a system prompt from responses");
  reconstruct->add_option("--responses", responses_path, "responses file")->required();
  reconstruct->add_option("--transform", transform);
  reconstruct->add_option("--out", out);

  auto* evaluate = cli.add_subcommand("evaluate", "score responses against an application");
  evaluate->add_option("--config", app_path, "application spec (JSON)")->required();
  evaluate->add_option("--responses", responses_path, "responses file")->required();
  evaluate->add_option("--transform", transform);
  evaluate->add_option("--checkpoint", checkpoint, "embedding table for SS");
  evaluate->add_option("--seed", seed);
  evaluate->add_option("--out", out);

  auto* report = cli.add_subcommand("report", "re-emit a stored report");
  std::string report_in, report_format = "csv";
  report->add_option("--in", report_in, "structured report")->required();
  report->add_option("--format", report_format, "csv|structured|summary");
  report->add_option("--out", out);

  CLI11_PARSE(cli, argc, argv);

  try {
    if (kernels == "scalar") {
      simd::select(simd::Backend::kScalar);
    } else if (kernels == "avx2" && !simd::select(simd::Backend::kAvx2)) {
      throw Error(ErrorCode::kConfig, "AVX2 kernels are not available on this machine");
    }
    if (*train) return train_lm_command(train_dataset, train_config, train_seed, train_out);
    if (*attack) return attack_command(attack_flags);
    if (*run) {
      const ExperimentConfig config = run_flags.resolve();
      write_outputs(run_experiment(config), config.out);
      return 0;
    }
    if (*transfer) {
      const ExperimentConfig attacker = transfer_flags.resolve();
      ExperimentConfig target = load_experiment_config(target_config);
      if (!target.seed) target.seed = attacker.seed;
      write_outputs(transfer_experiment(attacker, target), attacker.out);
      return 0;
    }
    if (*respond) {
      return respond_command(app_path, aq_path, transform, defense, response_filter, decoding, seed, out);
    }
    if (*reconstruct) return reconstruct_command(responses_path, transform, out);
    if (*evaluate) {
      return evaluate_command(app_path, responses_path, transform, checkpoint, seed.value_or(0), out);
    }
    if (*report) return report_command(report_in, report_format, out);
  } catch (const Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", error_code_name(e.code()), e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
