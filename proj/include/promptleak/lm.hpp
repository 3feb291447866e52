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
#include <vector>

#include "promptleak/rng.hpp"
#include "promptleak/vocab.hpp"

namespace promptleak {

// A d-dimensional input embedding. Adversarial slots are carried as raw
// vectors so that gradients can be taken with respect to them.
using Embedding = std::vector<double>;

struct LmDims {
  std::size_t embed_dim = 32;
  std::size_t context = 16;
  std::size_t hidden = 64;

  bool operator==(const LmDims&) const = default;
};

// Fixed-window MLP language model:
//
//   x      = concat(E[w_1], ..., E[w_C])            (window of the last C
//                                                    inputs, BOS-padded)
//   h      = tanh(x W1 + b1)                        W1: (C*d) x H
//   logits = h W2 + b2                              W2: H x |V|
//   p      = softmax(logits)
//
// All parameters are stored row-major in the shapes shown.
class TinyLM {
 public:
  TinyLM(Vocabulary vocab, LmDims dims);

  const Vocabulary& vocab() const { return vocab_; }
  const LmDims& dims() const { return dims_; }
  std::size_t vocab_size() const { return vocab_.size(); }
  std::size_t embed_dim() const { return dims_.embed_dim; }
  std::size_t context() const { return dims_.context; }
  std::size_t hidden() const { return dims_.hidden; }
  std::size_t input_size() const { return dims_.context * dims_.embed_dim; }

  std::span<const double> embedding(TokenId id) const;
  std::span<double> embedding(TokenId id);

  std::vector<double>& embeddings() { return embeddings_; }
  const std::vector<double>& embeddings() const { return embeddings_; }
  std::vector<double>& hidden_weights() { return hidden_weights_; }
  const std::vector<double>& hidden_weights() const { return hidden_weights_; }
  std::vector<double>& hidden_bias() { return hidden_bias_; }
  const std::vector<double>& hidden_bias() const { return hidden_bias_; }
  std::vector<double>& output_weights() { return output_weights_; }
  const std::vector<double>& output_weights() const { return output_weights_; }
  std::vector<double>& output_bias() { return output_bias_; }
  const std::vector<double>& output_bias() const { return output_bias_; }

  // Gaussian initialization: embeddings with std `embed_scale`, weight
  // matrices with std 1/sqrt(fan_in), zero biases.
  void randomize(Rng& rng, double embed_scale);

  bool all_finite() const;

  bool operator==(const TinyLM& other) const = default;

 private:
  Vocabulary vocab_;
  LmDims dims_;
  std::vector<double> embeddings_;
  std::vector<double> hidden_weights_;
  std::vector<double> hidden_bias_;
  std::vector<double> output_weights_;
  std::vector<double> output_bias_;
};

// Next-token distribution given a token context. Contexts longer than the
// window keep the last C tokens; shorter ones are left-padded with BOS.
std::vector<double> next_token_dist(const TinyLM& model,
                                    std::span<const TokenId> context);

// Same, conditioning on raw embedding vectors (each of dimension d).
std::vector<double> next_token_dist_from_embeddings(
    const TinyLM& model, std::span<const Embedding> context);

// Sum over i of log Pr(continuation[i] | prefix, continuation[0..i)).
double sequence_logprob(const TinyLM& model, std::span<const TokenId> prefix,
                        std::span<const TokenId> continuation);

// How prompts shorter than the truncation length are treated by leak_loss.
enum class Normalization {
  // Prompts with fewer than t tokens are skipped; the rest score exactly t
  // tokens, each normalized by 1/t.
  kExcludeShort,
  // Every prompt scores min(t, n) tokens normalized by 1/min(t, n). Once t
  // reaches the longest prompt this is the length-normalized full loss.
  kClampToLength,
};

// Leak loss of an adversarial embedding sequence over a shadow prompt set:
//
//   -sum_e (1/T_e) sum_{i<T_e} log Pr(e_i | e ++ adv ++ e_0..e_{i-1})
//
// Throws Error(kEmptyStep) if no prompt contributes and
// Error(kInvalidInput) for t == 0.
double leak_loss(const TinyLM& model, std::span<const TokenSequence> shadow,
                 std::span<const Embedding> adversarial, std::size_t t,
                 Normalization mode = Normalization::kExcludeShort);

struct LossGradient {
  double loss = 0.0;
  std::vector<Embedding> gradients;  // one per adversarial slot
};

// Loss together with its exact gradient with respect to every adversarial
// embedding, from one backward pass per scored token.
LossGradient leak_loss_and_gradients(
    const TinyLM& model, std::span<const TokenSequence> shadow,
    std::span<const Embedding> adversarial, std::size_t t,
    Normalization mode = Normalization::kExcludeShort);

// Gradient with respect to adversarial slot `position` (0-based).
Embedding embedding_gradient(const TinyLM& model,
                             std::span<const TokenSequence> shadow,
                             std::span<const Embedding> adversarial,
                             std::size_t t, std::size_t position,
                             Normalization mode = Normalization::kExcludeShort);

// Embedding-table rows for a token sequence.
std::vector<Embedding> embed_tokens(const TinyLM& model,
                                    std::span<const TokenId> tokens);

struct TrainConfig {
  LmDims dims;
  std::size_t epochs = 30;
  double learning_rate = 0.05;
  double embed_scale = 0.1;
  std::uint64_t seed = 0;
};

struct TrainResult {
  TinyLM model;
  // Mean next-token cross-entropy over the corpus: index 0 is the freshly
  // initialized model, index k is after epoch k.
  std::vector<double> epoch_losses;
};

// Plain per-token SGD on next-token cross-entropy. Each corpus sequence is
// trained as s ++ EOS. Deterministic given the seed and kernel backend.
TrainResult train_lm(const Vocabulary& vocab,
                     std::span<const TokenSequence> corpus,
                     const TrainConfig& config);

double mean_cross_entropy(const TinyLM& model,
                          std::span<const TokenSequence> corpus);

}  // namespace promptleak
