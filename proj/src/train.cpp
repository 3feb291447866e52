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

#include <numeric>
#include <string>

#include "lm_internal.hpp"
#include "promptleak/error.hpp"
#include "promptleak/lm.hpp"
#include "promptleak/simd/kernels.hpp"

namespace promptleak {

namespace {

// Rows for s ++ EOS; predictions are made for every position.
void sequence_rows(const TinyLM& model, const TokenSequence& seq,
                   std::vector<const double*>& rows) {
  rows.clear();
  for (TokenId id : seq) rows.push_back(model.embedding(id).data());
}

void sgd_step(TinyLM& model, std::span<const TokenId> tokens,
              std::size_t position, TokenId target, double lr,
              detail::Workspace& ws) {
  const std::size_t d = model.embed_dim();
  const std::size_t c = model.context();
  const std::size_t hidden = model.hidden();
  const std::size_t v = model.vocab_size();
  const auto& kernels = simd::active();

  detail::backward_hidden(model, target, ws);
  detail::input_gradient_all(model, ws);

  double* w2 = model.output_weights().data();
  for (std::size_t k = 0; k < hidden; ++k) {
    kernels.axpy(-lr * ws.h[k], ws.dlogits.data(), w2 + k * v, v);
  }
  kernels.axpy(-lr, ws.dlogits.data(), model.output_bias().data(), v);

  double* w1 = model.hidden_weights().data();
  for (std::size_t i = 0; i < c * d; ++i) {
    if (ws.x[i] != 0.0) kernels.axpy(-lr * ws.x[i], ws.dz.data(), w1 + i * hidden, hidden);
  }
  kernels.axpy(-lr, ws.dz.data(), model.hidden_bias().data(), hidden);

  for (std::size_t w = 0; w < c; ++w) {
    const TokenId id = position + w >= c ? tokens[position + w - c]
                                         : model.vocab().bos();
    kernels.axpy(-lr, ws.dx.data() + w * d, model.embedding(id).data(), d);
  }
}

}  // namespace

double mean_cross_entropy(const TinyLM& model,
                          std::span<const TokenSequence> corpus) {
  detail::Workspace ws(model);
  std::vector<const double*> rows;
  TokenSequence seq;
  double total = 0.0;
  std::size_t count = 0;
  for (const TokenSequence& s : corpus) {
    seq.assign(s.begin(), s.end());
    seq.push_back(model.vocab().eos());
    sequence_rows(model, seq, rows);
    for (std::size_t i = 0; i < seq.size(); ++i) {
      detail::forward(model, rows, i, ws);
      total -= detail::log_prob(ws, seq[i]);
      ++count;
    }
  }
  return count == 0 ? 0.0 : total / static_cast<double>(count);
}

TrainResult train_lm(const Vocabulary& vocab,
                     std::span<const TokenSequence> corpus,
                     const TrainConfig& config) {
  if (corpus.empty()) throw Error(ErrorCode::kEmptyInput, "training corpus is empty");
  for (const TokenSequence& s : corpus) vocab.check(s);

  TrainResult result{TinyLM(vocab, config.dims), {}};
  TinyLM& model = result.model;
  Rng init_rng(config.seed, 0);
  model.randomize(init_rng, config.embed_scale);
  Rng order_rng(config.seed, 1);

  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  detail::Workspace ws(model);
  std::vector<const double*> rows;
  TokenSequence seq;

  result.epoch_losses.push_back(mean_cross_entropy(model, corpus));
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[order_rng.uniform_below(i)]);
    }
    for (std::size_t index : order) {
      seq.assign(corpus[index].begin(), corpus[index].end());
      seq.push_back(vocab.eos());
      // Row pointers stay valid while SGD updates the rows in place.
      sequence_rows(model, seq, rows);
      for (std::size_t i = 0; i < seq.size(); ++i) {
        detail::forward(model, rows, i, ws);
        sgd_step(model, seq, i, seq[i], config.learning_rate, ws);
      }
    }
    result.epoch_losses.push_back(mean_cross_entropy(model, corpus));
    if (!model.all_finite()) {
      throw Error(ErrorCode::kInvalidInput,
                  "training diverged at epoch " + std::to_string(epoch + 1));
    }
  }
  return result;
}

}  // namespace promptleak
