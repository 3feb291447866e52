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

#include "promptleak/attack.hpp"

#include <algorithm>

#include "promptleak/error.hpp"
#include "promptleak/rng.hpp"
#include "promptleak/simd/kernels.hpp"

namespace promptleak {

std::string_view to_string(InitMode mode) {
  switch (mode) {
    case InitMode::kRandom: return "random";
    case InitMode::kHuman: return "human";
    case InitMode::kMixed: return "mixed";
  }
  return "random";
}

InitMode parse_init_mode(std::string_view text) {
  if (text == "random") return InitMode::kRandom;
  if (text == "human") return InitMode::kHuman;
  if (text == "mixed") return InitMode::kMixed;
  throw Error(ErrorCode::kParse, "unknown init mode '" + std::string(text) + "'");
}

std::string_view to_string(FilterPolicy policy) {
  switch (policy) {
    case FilterPolicy::kNone: return "none";
    case FilterPolicy::kAsciiAlpha: return "ascii_alpha";
    case FilterPolicy::kPrintable: return "printable";
  }
  return "none";
}

FilterPolicy parse_filter_policy(std::string_view text) {
  if (text == "none") return FilterPolicy::kNone;
  if (text == "ascii_alpha") return FilterPolicy::kAsciiAlpha;
  if (text == "printable") return FilterPolicy::kPrintable;
  throw Error(ErrorCode::kParse, "unknown token filter '" + std::string(text) + "'");
}

bool token_filter(std::string_view token, FilterPolicy policy) {
  switch (policy) {
    case FilterPolicy::kNone:
      return true;
    case FilterPolicy::kAsciiAlpha:
      return !token.empty() && std::all_of(token.begin(), token.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
      });
    case FilterPolicy::kPrintable:
      return !token.empty() && std::all_of(token.begin(), token.end(), [](char c) {
        return c > ' ' && c < 0x7f;
      });
  }
  return false;
}

void AttackConfig::validate(std::size_t vocab_size) const {
  if (aq_length < 1) throw Error(ErrorCode::kInvalidInput, "AQ length m must be >= 1");
  if (step_size < 1) throw Error(ErrorCode::kInvalidInput, "step size s must be >= 1");
  if (top_k < 1 || top_k > vocab_size) {
    throw Error(ErrorCode::kInvalidInput, "top-k must be in [1, |V|]");
  }
  if (n_queries < 1) throw Error(ErrorCode::kInvalidInput, "n_queries must be >= 1");
}

void ShadowDataset::validate() const {
  if (prompts.empty()) throw Error(ErrorCode::kEmptyInput, "shadow dataset is empty");
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    if (prompts[i].empty()) {
      throw Error(ErrorCode::kEmptyInput,
                  "shadow prompt " +
                      (i < sources.size() ? sources[i] : std::to_string(i)) +
                      " is empty");
    }
  }
}

std::size_t ShadowDataset::max_length() const {
  std::size_t longest = 0;
  for (const auto& p : prompts) longest = std::max(longest, p.size());
  return longest;
}

namespace {

std::vector<TokenId> admitted_tokens(const Vocabulary& vocab, FilterPolicy filter) {
  std::vector<TokenId> allowed;
  for (TokenId id = 0; id < vocab.size(); ++id) {
    if (token_filter(vocab.token(id), filter)) allowed.push_back(id);
  }
  if (allowed.empty()) {
    throw Error(ErrorCode::kInvalidInput, "no vocabulary token passes the token filter");
  }
  return allowed;
}

std::size_t longest(std::span<const TokenSequence> shadow) {
  std::size_t n = 0;
  for (const auto& p : shadow) n = std::max(n, p.size());
  return n;
}

}  // namespace

AdversarialQuery initialize_aq(const Vocabulary& vocab, InitMode mode,
                               std::size_t m, std::uint64_t seed,
                               FilterPolicy filter,
                               std::optional<std::string_view> human_text) {
  if (m < 1) throw Error(ErrorCode::kInvalidInput, "AQ length m must be >= 1");
  AdversarialQuery aq;
  aq.init_mode = mode;
  aq.seed = seed;
  if (mode != InitMode::kRandom && !human_text) {
    throw Error(ErrorCode::kInvalidInput,
                std::string(to_string(mode)) + " initialization needs human text");
  }
  if (mode != InitMode::kRandom) {
    aq.tokens = vocab.encode(*human_text);
    if (mode == InitMode::kMixed && aq.tokens.size() > m) {
      throw Error(ErrorCode::kInvalidInput,
                  "human text has " + std::to_string(aq.tokens.size()) +
                      " tokens, more than m=" + std::to_string(m));
    }
    if (aq.tokens.size() > m) aq.tokens.resize(m);
  }
  if (mode == InitMode::kHuman) {
    aq.tokens.resize(m, vocab.pad());
    return aq;
  }
  const std::vector<TokenId> allowed = admitted_tokens(vocab, filter);
  Rng rng(seed, 0);
  while (aq.tokens.size() < m) {
    aq.tokens.push_back(allowed[rng.uniform_below(allowed.size())]);
  }
  return aq;
}

CandidateSet taylor_candidates(const TinyLM& model,
                               std::span<const double> gradient,
                               std::size_t position, std::size_t k,
                               FilterPolicy filter) {
  if (gradient.size() != model.embed_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "gradient dimension does not match d");
  }
  if (k < 1) throw Error(ErrorCode::kInvalidInput, "k must be >= 1");
  const Vocabulary& vocab = model.vocab();
  const auto& kernels = simd::active();
  CandidateSet set;
  set.position = position;
  set.candidates.reserve(vocab.size());
  for (TokenId id = 0; id < vocab.size(); ++id) {
    if (!token_filter(vocab.token(id), filter)) continue;
    set.candidates.push_back(
        {id, kernels.dot(model.embedding(id).data(), gradient.data(), gradient.size())});
  }
  if (set.candidates.empty()) {
    throw Error(ErrorCode::kInvalidInput, "no vocabulary token passes the token filter");
  }
  const auto less = [](const Candidate& a, const Candidate& b) {
    return a.score < b.score || (a.score == b.score && a.token < b.token);
  };
  const std::size_t keep = std::min(k, set.candidates.size());
  std::partial_sort(set.candidates.begin(), set.candidates.begin() + keep,
                    set.candidates.end(), less);
  set.candidates.resize(keep);
  return set;
}

CandidateSet taylor_candidates(const TinyLM& model,
                               std::span<const TokenSequence> shadow,
                               std::span<const Embedding> adversarial,
                               std::size_t t, std::size_t position,
                               std::size_t k, FilterPolicy filter,
                               Normalization mode) {
  const Embedding gradient =
      embedding_gradient(model, shadow, adversarial, t, position, mode);
  return taylor_candidates(model, gradient, position, k, filter);
}

AdversarialQuery generate_aq(const TinyLM& model,
                             std::span<const TokenSequence> shadow,
                             AdversarialQuery aq, std::size_t t,
                             const AttackConfig& config, Normalization mode) {
  config.validate(model.vocab_size());
  model.vocab().check(aq.tokens);
  if (aq.tokens.empty()) throw Error(ErrorCode::kInvalidInput, "empty adversarial query");

  std::vector<Embedding> adversarial = embed_tokens(model, aq.tokens);
  bool first = true;
  while (true) {
    const LossGradient current =
        leak_loss_and_gradients(model, shadow, adversarial, t, mode);
    if (first) {
      aq.loss_trace.push_back({t, current.loss});
      first = false;
    }

    double best_loss = current.loss;
    std::size_t best_position = 0;
    TokenId best_token = 0;
    bool improved = false;
    for (std::size_t j = 0; j < aq.tokens.size(); ++j) {
      const CandidateSet set = taylor_candidates(
          model, current.gradients[j], j, config.top_k, config.filter);
      const Embedding saved = adversarial[j];
      for (const Candidate& candidate : set.candidates) {
        if (candidate.token == aq.tokens[j]) continue;
        const auto row = model.embedding(candidate.token);
        adversarial[j].assign(row.begin(), row.end());
        const double loss = leak_loss(model, shadow, adversarial, t, mode);
        if (loss < best_loss) {
          best_loss = loss;
          best_position = j;
          best_token = candidate.token;
          improved = true;
        }
      }
      adversarial[j] = saved;
    }
    if (!improved) break;

    aq.tokens[best_position] = best_token;
    const auto row = model.embedding(best_token);
    adversarial[best_position].assign(row.begin(), row.end());
    aq.loss_trace.push_back({t, best_loss});
    ++aq.replacements;
  }
  return aq;
}

std::vector<std::size_t> truncation_schedule(std::size_t max_length,
                                             std::size_t step_size) {
  if (step_size < 1) throw Error(ErrorCode::kInvalidInput, "step size s must be >= 1");
  const std::size_t steps = (max_length + step_size - 1) / step_size;
  std::vector<std::size_t> schedule;
  for (std::size_t i = 1; i <= steps; ++i) schedule.push_back(i * step_size);
  return schedule;
}

AdversarialQuery increment_search(const TinyLM& model,
                                  std::span<const TokenSequence> shadow,
                                  AdversarialQuery initial,
                                  const AttackConfig& config) {
  ShadowDataset{{shadow.begin(), shadow.end()}, {}}.validate();
  const std::size_t max_length = longest(shadow);
  AdversarialQuery aq = std::move(initial);
  for (std::size_t t : truncation_schedule(max_length, config.step_size)) {
    const Normalization mode = t >= max_length ? Normalization::kClampToLength
                                               : Normalization::kExcludeShort;
    aq = generate_aq(model, shadow, std::move(aq), t, config, mode);
  }
  return aq;
}

AdversarialQuery increment_search(const TinyLM& model,
                                  std::span<const TokenSequence> shadow,
                                  const AttackConfig& config) {
  AdversarialQuery initial = initialize_aq(
      model.vocab(), config.init_mode, config.aq_length, config.seed, config.filter,
      config.init_mode == InitMode::kRandom
          ? std::nullopt
          : std::optional<std::string_view>(config.human_text));
  return increment_search(model, shadow, std::move(initial), config);
}

std::vector<AdversarialQuery> generate_aq_batch(
    const TinyLM& model, std::span<const TokenSequence> shadow,
    const AttackConfig& config) {
  config.validate(model.vocab_size());
  std::vector<AdversarialQuery> batch;
  batch.reserve(config.n_queries);
  for (std::size_t i = 0; i < config.n_queries; ++i) {
    AttackConfig run = config;
    run.seed = config.seed + i;
    batch.push_back(increment_search(model, shadow, run));
  }
  return batch;
}

}  // namespace promptleak
