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
#include <unordered_map>
#include <vector>

#include "promptleak/lm.hpp"
#include "promptleak/transforms.hpp"

namespace promptleak {

struct CandidateText {
  std::string text;
  std::size_t first = 0;   // indices of the response pair that agreed
  std::size_t second = 0;
};

struct ReconstructionResult {
  std::string reconstruction;
  std::vector<CandidateText> candidates;
  std::vector<std::string> inverted;  // one per response
};

// Inverts every response, then collects, for each pair i < j, the maximal
// runs of consecutive sentences the two responses share. The reconstruction
// is the longest candidate by character count (first one wins ties); with a
// single response it is that response, inverted. Throws Error(kEmptyInput)
// on an empty list.
ReconstructionResult post_process(std::span<const std::string> responses,
                                  const Transform& transform);

// Removes Unicode punctuation, collapses whitespace to single spaces, trims.
std::string strip_punct(std::string_view text);

// Length in Unicode code points.
std::size_t utf8_length(std::string_view text);

// Substring match and exact match on punctuation-stripped text.
int sm(std::string_view target, std::string_view reconstruction);
int em(std::string_view target, std::string_view reconstruction);

// Character-level Levenshtein distance of the stripped texts divided by the
// longer length; 0 when both are empty.
double eed(std::string_view target, std::string_view reconstruction);

std::size_t levenshtein(std::u32string_view a, std::u32string_view b);
std::u32string utf8_decode(std::string_view text);

// Maps text to the mean of its words' embedding rows. Lookup ignores
// punctuation on both sides; words the vocabulary lacks use the UNK row.
class Embedder {
 public:
  Embedder(const Vocabulary& vocab, std::vector<double> table, std::size_t dim);

  static Embedder from_model(const TinyLM& model);
  // Gaussian table for runs without a language model.
  static Embedder random(const Vocabulary& vocab, std::size_t dim, std::uint64_t seed);

  std::size_t dim() const { return dim_; }
  std::vector<double> mean_embedding(std::string_view text) const;

 private:
  std::vector<double> table_;
  std::size_t dim_;
  TokenId unk_;
  std::unordered_map<std::string, TokenId> index_;
};

// Cosine of the two mean embeddings; 0 if either is the zero vector.
double ss(std::string_view target, std::string_view reconstruction,
          const Embedder& embedder);

struct MetricReport {
  int sm = 0;
  int em = 0;
  double eed = 1.0;
  double ss = 0.0;
  std::vector<MetricReport> per_aq;
};

MetricReport score(std::string_view target, std::string_view reconstruction,
                   const Embedder& embedder);

// Best-of-N: sm, em and ss take the maximum, eed the minimum. The inputs are
// kept as the per-AQ breakdown. Throws Error(kEmptyInput) on an empty list.
MetricReport aggregate(std::span<const MetricReport> reports);

}  // namespace promptleak
