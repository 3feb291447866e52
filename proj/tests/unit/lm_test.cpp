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

#include "promptleak/lm.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "promptleak/error.hpp"
#include "support/oracles.hpp"

namespace promptleak {
namespace {

const LmDims kSmall{6, 5, 7};

TEST(TinyLM, ForwardMatchesNaiveOracle) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const TinyLM model = oracle::random_model(11, kSmall, seed);
    Rng rng(seed, 1);
    const TokenSequence ctx = oracle::random_tokens(rng, rng.uniform_below(9), 11);
    const auto fast = next_token_dist(model, ctx);
    const auto slow = oracle::naive_dist(model, oracle::rows_of(model, ctx));
    for (std::size_t v = 0; v < fast.size(); ++v) EXPECT_NEAR(fast[v], slow[v], 1e-12);
  }
}

TEST(TinyLM, DistributionNormalizesAndChainRuleAdds) {
  const TinyLM model = oracle::random_model(9, kSmall, 3);
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const TokenSequence prefix = oracle::random_tokens(rng, rng.uniform_below(6), 9);
    const TokenSequence a = oracle::random_tokens(rng, 1 + rng.uniform_below(4), 9);
    const TokenSequence b = oracle::random_tokens(rng, 1 + rng.uniform_below(4), 9);
    const auto dist = next_token_dist(model, prefix);
    EXPECT_NEAR(std::accumulate(dist.begin(), dist.end(), 0.0), 1.0, 1e-12);
    TokenSequence ab = a, prefix_a = prefix;
    ab.insert(ab.end(), b.begin(), b.end());
    prefix_a.insert(prefix_a.end(), a.begin(), a.end());
    EXPECT_NEAR(sequence_logprob(model, prefix, ab),
                sequence_logprob(model, prefix, a) + sequence_logprob(model, prefix_a, b), 1e-9);
  }
}

TEST(TinyLM, ExtremeLogitsStayNormalized) {
  // Two live tokens with logits 2 and 0, the rest pushed to -60.
  TinyLM model(oracle::word_vocab(0), LmDims{2, 2, 2});
  model.output_bias() = {2.0, 0.0, -60.0, -60.0};
  const auto dist = next_token_dist(model, TokenSequence{});
  const double z = std::exp(2.0) + 1.0 + 2.0 * std::exp(-60.0);
  EXPECT_NEAR(dist[0], std::exp(2.0) / z, 1e-15);
  EXPECT_NEAR(dist[1], 1.0 / z, 1e-15);
  EXPECT_NEAR(dist[0], 0.8807970779778823, 1e-12);
}

// Context-free model: every position predicts the same distribution.
TinyLM constant_model(const std::vector<double>& probs) {
  TinyLM model(oracle::word_vocab(probs.size() - 4), LmDims{3, 4, 2});
  for (std::size_t v = 0; v < probs.size(); ++v) model.output_bias()[v] = std::log(probs[v]);
  return model;
}

TEST(LeakLoss, HandComputedTwoStepExample) {
  // Tokens 4 and 5 play "a" and "b".
  const TinyLM model = constant_model({0.0625, 0.0625, 0.0625, 0.0625, 0.5, 0.25});
  const std::vector<TokenSequence> shadow{{4, 5}};
  const std::vector<Embedding> adv(2, Embedding(3, 0.0));
  EXPECT_NEAR(leak_loss(model, shadow, adv, 2), -(std::log(0.5) + std::log(0.25)) / 2, 1e-12);
  EXPECT_NEAR(leak_loss(model, shadow, adv, 2), 1.0397207708399179, 1e-12);
}

TEST(LeakLoss, MatchesOracleInBothModes) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const TinyLM model = oracle::random_model(10, kSmall, seed);
    Rng rng(seed, 2);
    std::vector<TokenSequence> shadow;
    for (int i = 0; i < 3; ++i) shadow.push_back(oracle::random_tokens(rng, 2 + rng.uniform_below(6), 10));
    std::vector<Embedding> adv(3, Embedding(kSmall.embed_dim));
    for (auto& e : adv) for (double& x : e) x = rng.normal();
    for (std::size_t t = 1; t <= 9; ++t) {
      EXPECT_NEAR(leak_loss(model, shadow, adv, t, Normalization::kClampToLength),
                  oracle::leak_loss(model, shadow, adv, t, true), 1e-10);
      const bool any = std::any_of(shadow.begin(), shadow.end(),
                                   [&](const TokenSequence& p) { return p.size() >= t; });
      if (any) {
        EXPECT_NEAR(leak_loss(model, shadow, adv, t), oracle::leak_loss(model, shadow, adv, t, false), 1e-10);
      } else {
        EXPECT_THROW(leak_loss(model, shadow, adv, t), Error);
      }
    }
  }
}

TEST(LeakLoss, ShortPromptsAreExcluded) {
  const TinyLM model = oracle::random_model(10, kSmall, 4);
  const TokenSequence short_prompt{5, 6}, long_prompt{7, 8, 9, 4};
  const std::vector<Embedding> adv = embed_tokens(model, TokenSequence{4, 5});
  const std::vector<TokenSequence> both{short_prompt, long_prompt}, only{long_prompt};
  EXPECT_DOUBLE_EQ(leak_loss(model, both, adv, 3), leak_loss(model, only, adv, 3));
}

TEST(LeakLoss, SinglePromptEqualsSequenceLogprob) {
  const TinyLM model = oracle::random_model(12, kSmall, 8);
  const TokenSequence prompt{4, 9, 11, 5, 6}, aq{7, 8, 10};
  TokenSequence prefix = prompt;
  prefix.insert(prefix.end(), aq.begin(), aq.end());
  const std::vector<TokenSequence> shadow{prompt};
  for (std::size_t t = 1; t <= prompt.size(); ++t) {
    const double expected =
        -sequence_logprob(model, prefix, std::span(prompt).first(t)) / static_cast<double>(t);
    EXPECT_NEAR(leak_loss(model, shadow, embed_tokens(model, aq), t), expected, 1e-9);
  }
}

TEST(LeakLoss, RejectsZeroTruncation) {
  const TinyLM model = oracle::random_model(6, kSmall, 1);
  const std::vector<TokenSequence> shadow{{4, 5}};
  EXPECT_THROW(leak_loss(model, shadow, embed_tokens(model, TokenSequence{4}), 0), Error);
}

TEST(Gradient, MatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const TinyLM model = oracle::random_model(9, kSmall, seed + 100);
    Rng rng(seed, 3);
    std::vector<TokenSequence> shadow{oracle::random_tokens(rng, 4, 9), oracle::random_tokens(rng, 3, 9)};
    std::vector<Embedding> adv = embed_tokens(model, oracle::random_tokens(rng, 3, 9));
    const std::size_t t = 1 + rng.uniform_below(3);
    for (std::size_t j = 0; j < adv.size(); ++j) {
      const Embedding analytic = embedding_gradient(model, shadow, adv, t, j);
      const Embedding numeric = oracle::fd_gradient(
          [&](const std::vector<Embedding>& a) { return leak_loss(model, shadow, a, t); }, adv, j);
      EXPECT_LT(oracle::max_relative_error(analytic, numeric), 1e-4) << "seed " << seed << " j " << j;
    }
  }
}

TEST(Gradient, ZeroOutsideEveryWindow) {
  const TinyLM model = oracle::random_model(9, LmDims{4, 4, 5}, 7);
  const std::vector<TokenSequence> shadow{{4, 5, 6}};
  const std::vector<Embedding> adv = embed_tokens(model, TokenSequence(10, 7));
  const Embedding g = embedding_gradient(model, shadow, adv, 2, 0);
  for (double x : g) EXPECT_EQ(x, 0.0);
  EXPECT_THROW(embedding_gradient(model, shadow, adv, 2, 10), Error);
}

TEST(Gradient, DuplicatingAPromptDoublesIt) {
  const TinyLM model = oracle::random_model(9, kSmall, 9);
  const std::vector<TokenSequence> one{{4, 5, 6, 7}}, two{{4, 5, 6, 7}, {4, 5, 6, 7}};
  const std::vector<Embedding> adv = embed_tokens(model, TokenSequence{8, 5});
  const Embedding g1 = embedding_gradient(model, one, adv, 3, 1);
  const Embedding g2 = embedding_gradient(model, two, adv, 3, 1);
  for (std::size_t k = 0; k < g1.size(); ++k) EXPECT_NEAR(g2[k], 2 * g1[k], 1e-12);
}

TEST(Training, DeterministicAndOverfits) {
  std::vector<std::string> lines;
  Rng rng(17);
  const char* words[] = {"red", "green", "blue", "cat", "dog", "runs", "sits", "the", "a", "fast"};
  for (int i = 0; i < 50; ++i) {
    std::string line;
    for (int w = 0; w < 6; ++w) line += std::string(words[rng.uniform_below(10)]) + " ";
    lines.push_back(line);
  }
  const Vocabulary vocab = Vocabulary::build(lines);
  std::vector<TokenSequence> corpus;
  for (const auto& line : lines) corpus.push_back(vocab.encode(line));
  TrainConfig config;
  config.dims = LmDims{16, 8, 32};
  config.epochs = 60;
  config.learning_rate = 0.05;
  config.seed = 5;
  const TrainResult a = train_lm(vocab, corpus, config);
  const TrainResult b = train_lm(vocab, corpus, config);
  EXPECT_TRUE(a.model == b.model);
  ASSERT_EQ(a.epoch_losses.size(), config.epochs + 1);
  EXPECT_LT(a.epoch_losses.back(), 0.5 * a.epoch_losses.front());
  EXPECT_NEAR(a.epoch_losses.back(), mean_cross_entropy(a.model, corpus), 1e-12);
  EXPECT_THROW(train_lm(vocab, {}, config), Error);
}

}  // namespace
}  // namespace promptleak
