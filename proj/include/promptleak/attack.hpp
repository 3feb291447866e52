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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "promptleak/lm.hpp"

namespace promptleak {

enum class InitMode { kRandom, kHuman, kMixed };
enum class FilterPolicy { kNone, kAsciiAlpha, kPrintable };

std::string_view to_string(InitMode mode);
InitMode parse_init_mode(std::string_view text);
std::string_view to_string(FilterPolicy policy);
FilterPolicy parse_filter_policy(std::string_view text);

// `kAsciiAlpha` admits non-empty tokens made only of [A-Za-z];
// `kPrintable` admits non-empty tokens of printable, non-space ASCII.
bool token_filter(std::string_view token, FilterPolicy policy);

struct AttackConfig {
  std::size_t aq_length = 12;   // m
  std::size_t step_size = 30;   // s
  std::size_t top_k = 32;       // candidates kept per position
  std::size_t n_queries = 4;    // n
  InitMode init_mode = InitMode::kRandom;
  std::string human_text;
  FilterPolicy filter = FilterPolicy::kNone;
  std::uint64_t seed = 0;

  void validate(std::size_t vocab_size) const;
};

struct LossPoint {
  std::size_t t = 0;
  double loss = 0.0;

  bool operator==(const LossPoint&) const = default;
};

struct AdversarialQuery {
  TokenSequence tokens;
  InitMode init_mode = InitMode::kRandom;
  std::string transform_id = "identity";
  std::uint64_t seed = 0;
  // Per optimization step: the step's starting loss, then every accepted
  // replacement, all tagged with the step's truncation length t.
  std::vector<LossPoint> loss_trace;
  std::size_t replacements = 0;

  bool operator==(const AdversarialQuery&) const = default;
};

struct ShadowDataset {
  std::vector<TokenSequence> prompts;
  std::vector<std::string> sources;  // record ids, parallel to prompts

  // Throws Error(kEmptyInput) when empty or when any prompt is empty.
  void validate() const;
  std::size_t max_length() const;
};

struct Candidate {
  TokenId token;
  double score;  // e' . grad
};

struct CandidateSet {
  std::size_t position = 0;
  std::vector<Candidate> candidates;  // ascending score, ties by token id
};

// Builds the starting query. Random tokens are drawn uniformly from the
// filter-passing part of the vocabulary. Human text is tokenized as given
// and padded with PAD (or truncated) to m; mixed mode requires the text to
// fit in m and fills the remainder with seeded random tokens.
AdversarialQuery initialize_aq(const Vocabulary& vocab, InitMode mode,
                               std::size_t m, std::uint64_t seed,
                               FilterPolicy filter,
                               std::optional<std::string_view> human_text = {});

// The k filter-passing tokens whose embeddings minimize e' . gradient.
CandidateSet taylor_candidates(const TinyLM& model,
                               std::span<const double> gradient,
                               std::size_t position, std::size_t k,
                               FilterPolicy filter);

// Same, computing the gradient at `position` first.
CandidateSet taylor_candidates(const TinyLM& model,
                               std::span<const TokenSequence> shadow,
                               std::span<const Embedding> adversarial,
                               std::size_t t, std::size_t position,
                               std::size_t k, FilterPolicy filter,
                               Normalization mode = Normalization::kExcludeShort);

// One optimization step at truncation length t: repeatedly applies the
// single best candidate replacement across all positions while it strictly
// lowers the loss. Returns a sweep fixpoint.
AdversarialQuery generate_aq(const TinyLM& model,
                             std::span<const TokenSequence> shadow,
                             AdversarialQuery aq, std::size_t t,
                             const AttackConfig& config,
                             Normalization mode = Normalization::kExcludeShort);

// Truncation lengths visited by the incremental search:
// s, 2s, ..., ceil(L/s) * s.
std::vector<std::size_t> truncation_schedule(std::size_t max_length,
                                             std::size_t step_size);

// Incremental search from a given starting query. Steps with t below the
// longest prompt skip prompts shorter than t; the final step (t >= L) scores
// every prompt in full, normalized by its own length.
AdversarialQuery increment_search(const TinyLM& model,
                                  std::span<const TokenSequence> shadow,
                                  AdversarialQuery initial,
                                  const AttackConfig& config);

// Incremental search starting from initialize_aq(config).
AdversarialQuery increment_search(const TinyLM& model,
                                  std::span<const TokenSequence> shadow,
                                  const AttackConfig& config);

// n independent searches with seeds seed, seed+1, ..., seed+n-1.
std::vector<AdversarialQuery> generate_aq_batch(
    const TinyLM& model, std::span<const TokenSequence> shadow,
    const AttackConfig& config);

// AQ artifact: {aq_tokens, aq_token_ids, init_mode, transform_id, config,
// loss_trace, seed}.
std::string aq_artifact_to_string(std::span<const AdversarialQuery> queries,
                                  const Vocabulary& vocab,
                                  const AttackConfig& config);

struct AqArtifact {
  AttackConfig config;
  std::vector<AdversarialQuery> queries;
  std::vector<std::vector<std::string>> token_strings;
};

AqArtifact aq_artifact_from_string(std::string_view text);
void save_aq_artifact(const std::filesystem::path& path,
                      std::span<const AdversarialQuery> queries,
                      const Vocabulary& vocab, const AttackConfig& config);
AqArtifact load_aq_artifact(const std::filesystem::path& path);

// Re-encodes artifact tokens by string in `vocab`; unknown strings map to UNK.
std::vector<TokenSequence> remap_queries(const AqArtifact& artifact,
                                         const Vocabulary& vocab);

}  // namespace promptleak
