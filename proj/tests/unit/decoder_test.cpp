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

#include "promptleak/decoder.hpp"

#include <gtest/gtest.h>

#include <cmath>

#include "promptleak/error.hpp"
#include "support/oracles.hpp"

namespace promptleak {
namespace {

TEST(Truncation, TopKAndTopP) {
  const std::vector<double> dist{0.1, 0.4, 0.2, 0.3};
  const auto k2 = truncated_renormalize(dist, TopK{2});
  EXPECT_NEAR(k2[1], 0.4 / 0.7, 1e-15);
  EXPECT_NEAR(k2[3], 0.3 / 0.7, 1e-15);
  EXPECT_EQ(k2[0], 0.0);
  EXPECT_EQ(k2[2], 0.0);
  const auto p = truncated_renormalize(dist, TopP{0.65});  // 0.4 + 0.3 reaches it
  EXPECT_NEAR(p[1] + p[3], 1.0, 1e-15);
  EXPECT_EQ(p[2], 0.0);
  EXPECT_EQ(truncated_renormalize(dist, TopK{4}), dist);
  EXPECT_EQ(truncated_renormalize(dist, TopP{1.0}), dist);
  EXPECT_THROW(truncated_renormalize(dist, TopK{0}), Error);
  EXPECT_THROW(truncated_renormalize(dist, TopP{0.0}), Error);
}

TEST(Truncation, ArgmaxBreaksTiesLow) {
  EXPECT_EQ(argmax_token(std::vector<double>{0.25, 0.375, 0.375}), 1u);
}

TEST(Decoding, ParseRoundTrip) {
  for (const char* text : {"greedy", "beam:3", "topk:5", "topp:0.9", "beamsample:4,0.8"}) {
    EXPECT_EQ(DecodingStrategy::parse(text).to_string(), text);
  }
  EXPECT_THROW(DecodingStrategy::parse("beam"), Error);
  EXPECT_THROW(DecodingStrategy::parse("nucleus:0.9"), Error);
  EXPECT_THROW(DecodingStrategy::parse("beamsample:4"), Error);
  EXPECT_THROW(DecodingStrategy::parse("topp:1.5").validate(10), Error);
}

TEST(Decoding, BeamOneAndTopKOneEqualGreedy) {
  for (std::uint64_t seed = 0; seed < 25; ++seed) {
    const TinyLM model = oracle::random_model(12, LmDims{5, 4, 8}, seed, 1.5);
    Rng rng(seed, 7);
    const TokenSequence prompt = oracle::random_tokens(rng, 1 + rng.uniform_below(5), 12);
    const Response greedy = decode(model, prompt, DecodingStrategy::greedy(12));
    EXPECT_EQ(decode(model, prompt, DecodingStrategy::beam(1, 12)).tokens, greedy.tokens);
    EXPECT_EQ(decode(model, prompt, DecodingStrategy::top_k_sampling(1, seed, 12)).tokens, greedy.tokens);
  }
}

TEST(Decoding, WideBeamIsExhaustive) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TinyLM model = oracle::random_model(5, LmDims{3, 3, 6}, seed, 2.0);
    const TokenSequence prompt{4, 4};
    const Response beam = decode(model, prompt, DecodingStrategy::beam(125, 3));
    const oracle::Scored best = oracle::exhaustive_decode(model, prompt, 3);
    EXPECT_EQ(beam.tokens, best.tokens);
    EXPECT_NEAR(beam.log_prob, best.log_prob, 1e-12);
  }
}

TEST(Decoding, GreedyStopsAtEos) {
  TinyLM model(oracle::word_vocab(2), LmDims{2, 2, 2});
  model.output_bias() = {0.0, 5.0, 0.0, 0.0, 1.0, 0.0};
  const Response r = decode(model, TokenSequence{4}, DecodingStrategy::greedy());
  EXPECT_TRUE(r.tokens.empty());
  EXPECT_EQ(r.finish, FinishReason::kEos);
}

TEST(Decoding, SamplingIsSeedDeterministic) {
  const TinyLM model = oracle::random_model(20, LmDims{4, 4, 6}, 3, 0.2);
  const TokenSequence prompt{5, 6};
  for (const DecodingStrategy& s :
       {DecodingStrategy::top_k_sampling(5, 9, 20), DecodingStrategy::top_p_sampling(0.9, 9, 20),
        DecodingStrategy::beam_sample(3, 0.9, 9, 20)}) {
    const Response a = decode(model, prompt, s);
    const Response b = decode(model, prompt, s);
    EXPECT_EQ(a.tokens, b.tokens);
    EXPECT_EQ(a.log_prob, b.log_prob);
    for (TokenId id : a.tokens) EXPECT_LT(id, 20u);
  }
}

TEST(Decoding, TopKSamplesStayInsideTopK) {
  const TinyLM model = oracle::random_model(16, LmDims{4, 4, 6}, 11, 1.0);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const TokenSequence prompt{7};
    const Response r = decode(model, prompt, DecodingStrategy::top_k_sampling(2, seed, 1));
    if (r.tokens.empty()) continue;
    const auto dist = next_token_dist(model, prompt);
    std::vector<double> sorted = dist;
    std::sort(sorted.rbegin(), sorted.rend());
    EXPECT_GE(dist[r.tokens[0]], sorted[1]);
  }
}

}  // namespace
}  // namespace promptleak
