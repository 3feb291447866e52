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
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "promptleak/lm.hpp"

namespace promptleak {

enum class DecodingKind { kGreedy, kBeam, kTopK, kTopP, kBeamSample };

struct DecodingStrategy {
  DecodingKind kind = DecodingKind::kGreedy;
  std::size_t beam_size = 1;
  std::size_t top_k = 1;
  double top_p = 1.0;
  std::uint64_t seed = 0;
  std::size_t max_new_tokens = 256;

  static DecodingStrategy greedy(std::size_t max_new_tokens = 256);
  static DecodingStrategy beam(std::size_t beam_size, std::size_t max_new_tokens = 256);
  static DecodingStrategy top_k_sampling(std::size_t k, std::uint64_t seed,
                                         std::size_t max_new_tokens = 256);
  static DecodingStrategy top_p_sampling(double p, std::uint64_t seed,
                                         std::size_t max_new_tokens = 256);
  static DecodingStrategy beam_sample(std::size_t beam_size, double p,
                                      std::uint64_t seed,
                                      std::size_t max_new_tokens = 256);

  // "greedy", "beam:<b>", "topk:<k>", "topp:<p>", "beamsample:<b>,<p>".
  // The seed and length limit are not part of the spelling.
  static DecodingStrategy parse(std::string_view text);
  std::string to_string() const;

  bool is_sampling() const {
    return kind == DecodingKind::kTopK || kind == DecodingKind::kTopP ||
           kind == DecodingKind::kBeamSample;
  }

  // Throws Error(kInvalidInput) when a parameter is outside its range.
  void validate(std::size_t vocab_size) const;

  bool operator==(const DecodingStrategy&) const = default;
};

enum class FinishReason { kEos, kLength };

struct Response {
  TokenSequence tokens;  // EOS excluded
  FinishReason finish = FinishReason::kLength;
  double log_prob = 0.0;  // total, including the EOS step when present
};

Response decode(const TinyLM& model, std::span<const TokenId> prompt,
                const DecodingStrategy& strategy);

struct TopK {
  std::size_t k;
};
struct TopP {
  double p;
};
using TruncationMode = std::variant<TopK, TopP>;

// Restricts `dist` to its top-k tokens, or to the shortest prefix of the
// probability-sorted tokens whose mass reaches p, and renormalizes. Sorting
// breaks ties by lower token id. When nothing is removed the input is
// returned unchanged.
std::vector<double> truncated_renormalize(std::span<const double> dist,
                                          TruncationMode mode);

// Index of the largest entry; ties go to the lowest index.
TokenId argmax_token(std::span<const double> dist);

}  // namespace promptleak
