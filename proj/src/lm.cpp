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

#include <algorithm>
#include <cmath>
#include <string>

#include "lm_internal.hpp"
#include "promptleak/error.hpp"
#include "promptleak/simd/kernels.hpp"

namespace promptleak {

TinyLM::TinyLM(Vocabulary vocab, LmDims dims)
    : vocab_(std::move(vocab)), dims_(dims) {
  if (dims_.embed_dim == 0 || dims_.context == 0 || dims_.hidden == 0) {
    throw Error(ErrorCode::kInvalidInput, "model dimensions must be positive");
  }
  const std::size_t v = vocab_.size();
  embeddings_.assign(v * dims_.embed_dim, 0.0);
  hidden_weights_.assign(input_size() * dims_.hidden, 0.0);
  hidden_bias_.assign(dims_.hidden, 0.0);
  output_weights_.assign(dims_.hidden * v, 0.0);
  output_bias_.assign(v, 0.0);
}

std::span<const double> TinyLM::embedding(TokenId id) const {
  if (id >= vocab_.size()) vocab_.token(id);  // throws
  return {embeddings_.data() + std::size_t{id} * dims_.embed_dim,
          dims_.embed_dim};
}

std::span<double> TinyLM::embedding(TokenId id) {
  if (id >= vocab_.size()) vocab_.token(id);
  return {embeddings_.data() + std::size_t{id} * dims_.embed_dim,
          dims_.embed_dim};
}

void TinyLM::randomize(Rng& rng, double embed_scale) {
  for (double& w : embeddings_) w = embed_scale * rng.normal();
  const double hidden_std = 1.0 / std::sqrt(static_cast<double>(input_size()));
  for (double& w : hidden_weights_) w = hidden_std * rng.normal();
  const double output_std = 1.0 / std::sqrt(static_cast<double>(dims_.hidden));
  for (double& w : output_weights_) w = output_std * rng.normal();
  std::fill(hidden_bias_.begin(), hidden_bias_.end(), 0.0);
  std::fill(output_bias_.begin(), output_bias_.end(), 0.0);
}

bool TinyLM::all_finite() const {
  auto finite = [](const std::vector<double>& values) {
    return std::all_of(values.begin(), values.end(),
                       [](double x) { return std::isfinite(x); });
  };
  return finite(embeddings_) && finite(hidden_weights_) &&
         finite(hidden_bias_) && finite(output_weights_) &&
         finite(output_bias_);
}

namespace detail {

Workspace::Workspace(const TinyLM& model)
    : x(model.input_size()),
      h(model.hidden()),
      logits(model.vocab_size()),
      probs(model.vocab_size()),
      dlogits(model.vocab_size()),
      dz(model.hidden()),
      dx(model.input_size()) {}

void forward(const TinyLM& model, std::span<const double* const> rows,
             std::size_t position, Workspace& ws) {
  const std::size_t d = model.embed_dim();
  const std::size_t c = model.context();
  const std::size_t hidden = model.hidden();
  const std::size_t v = model.vocab_size();
  const double* bos = model.embedding(model.vocab().bos()).data();
  const auto& kernels = simd::active();

  for (std::size_t w = 0; w < c; ++w) {
    const double* src = bos;
    if (position + w >= c) src = rows[position + w - c];
    std::copy(src, src + d, ws.x.begin() + w * d);
  }

  std::copy(model.hidden_bias().begin(), model.hidden_bias().end(),
            ws.h.begin());
  const double* w1 = model.hidden_weights().data();
  for (std::size_t i = 0; i < c * d; ++i) {
    if (ws.x[i] != 0.0) kernels.axpy(ws.x[i], w1 + i * hidden, ws.h.data(), hidden);
  }
  for (double& a : ws.h) a = std::tanh(a);

  std::copy(model.output_bias().begin(), model.output_bias().end(),
            ws.logits.begin());
  const double* w2 = model.output_weights().data();
  for (std::size_t k = 0; k < hidden; ++k) {
    kernels.axpy(ws.h[k], w2 + k * v, ws.logits.data(), v);
  }

  const double max_logit = *std::max_element(ws.logits.begin(), ws.logits.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < v; ++i) {
    ws.probs[i] = std::exp(ws.logits[i] - max_logit);
    sum += ws.probs[i];
  }
  const double inv = 1.0 / sum;
  for (double& p : ws.probs) p *= inv;
  ws.log_norm = max_logit + std::log(sum);
}

void backward_hidden(const TinyLM& model, TokenId target, Workspace& ws) {
  const std::size_t v = model.vocab_size();
  const std::size_t hidden = model.hidden();
  std::copy(ws.probs.begin(), ws.probs.end(), ws.dlogits.begin());
  ws.dlogits[target] -= 1.0;
  simd::active().matvec(model.output_weights().data(), hidden, v,
                        ws.dlogits.data(), ws.dz.data());
  for (std::size_t k = 0; k < hidden; ++k) ws.dz[k] *= 1.0 - ws.h[k] * ws.h[k];
}

void input_gradient(const TinyLM& model, std::size_t slot, const Workspace& ws,
                    std::span<double> out) {
  const std::size_t d = model.embed_dim();
  const std::size_t hidden = model.hidden();
  simd::active().matvec(model.hidden_weights().data() + slot * d * hidden, d,
                        hidden, ws.dz.data(), out.data());
}

void input_gradient_all(const TinyLM& model, Workspace& ws) {
  simd::active().matvec(model.hidden_weights().data(), model.input_size(),
                        model.hidden(), ws.dz.data(), ws.dx.data());
}

}  // namespace detail

namespace {

void append_token_rows(const TinyLM& model, std::span<const TokenId> tokens,
                       std::vector<const double*>& rows) {
  for (TokenId id : tokens) rows.push_back(model.embedding(id).data());
}

void check_embeddings(const TinyLM& model, std::span<const Embedding> vectors) {
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].size() != model.embed_dim()) {
      throw Error(ErrorCode::kDimensionMismatch,
                  "embedding " + std::to_string(i) + " has dimension " +
                      std::to_string(vectors[i].size()) + ", model expects " +
                      std::to_string(model.embed_dim()));
    }
  }
}

// Shared driver for leak_loss and its gradient.
LossGradient evaluate_leak(const TinyLM& model,
                           std::span<const TokenSequence> shadow,
                           std::span<const Embedding> adversarial,
                           std::size_t t, Normalization mode,
                           bool want_gradient) {
  if (t == 0) throw Error(ErrorCode::kInvalidInput, "truncation length t must be >= 1");
  check_embeddings(model, adversarial);
  for (const TokenSequence& prompt : shadow) model.vocab().check(prompt);

  const std::size_t m = adversarial.size();
  const std::size_t d = model.embed_dim();
  const std::size_t c = model.context();
  LossGradient result;
  if (want_gradient) result.gradients.assign(m, Embedding(d, 0.0));

  detail::Workspace ws(model);
  std::vector<double> slot_grad(d);
  std::vector<const double*> rows;
  bool any = false;

  for (const TokenSequence& prompt : shadow) {
    const std::size_t n = prompt.size();
    if (mode == Normalization::kExcludeShort && n < t) continue;
    const std::size_t scored = std::min(t, n);
    if (scored == 0) continue;
    any = true;

    rows.clear();
    append_token_rows(model, prompt, rows);
    for (const Embedding& e : adversarial) rows.push_back(e.data());
    append_token_rows(model, std::span(prompt).first(scored - 1), rows);

    const double weight = 1.0 / static_cast<double>(scored);
    double prompt_loss = 0.0;
    for (std::size_t i = 0; i < scored; ++i) {
      const std::size_t position = n + m + i;
      detail::forward(model, rows, position, ws);
      prompt_loss -= detail::log_prob(ws, prompt[i]);
      if (!want_gradient) continue;

      // Window slot w holds sequence index position - c + w.
      const std::size_t first_adv = n;
      const std::size_t lo = position >= c ? position - c : 0;
      const std::size_t begin = std::max(lo, first_adv);
      const std::size_t end = std::min(position, first_adv + m);
      if (begin >= end) continue;
      detail::backward_hidden(model, prompt[i], ws);
      for (std::size_t seq = begin; seq < end; ++seq) {
        const std::size_t slot = seq + c - position;
        detail::input_gradient(model, slot, ws, slot_grad);
        simd::active().axpy(weight, slot_grad.data(),
                            result.gradients[seq - first_adv].data(), d);
      }
    }
    result.loss += prompt_loss * weight;
  }
  if (!any) {
    throw Error(ErrorCode::kEmptyStep,
                "no shadow prompt has at least t=" + std::to_string(t) + " tokens");
  }
  return result;
}

}  // namespace

std::vector<double> next_token_dist(const TinyLM& model,
                                    std::span<const TokenId> context) {
  model.vocab().check(context);
  std::vector<const double*> rows;
  rows.reserve(context.size());
  append_token_rows(model, context, rows);
  detail::Workspace ws(model);
  detail::forward(model, rows, rows.size(), ws);
  return ws.probs;
}

std::vector<double> next_token_dist_from_embeddings(
    const TinyLM& model, std::span<const Embedding> context) {
  check_embeddings(model, context);
  std::vector<const double*> rows;
  rows.reserve(context.size());
  for (const Embedding& e : context) rows.push_back(e.data());
  detail::Workspace ws(model);
  detail::forward(model, rows, rows.size(), ws);
  return ws.probs;
}

double sequence_logprob(const TinyLM& model, std::span<const TokenId> prefix,
                        std::span<const TokenId> continuation) {
  model.vocab().check(prefix);
  model.vocab().check(continuation);
  std::vector<const double*> rows;
  append_token_rows(model, prefix, rows);
  append_token_rows(model, continuation, rows);
  detail::Workspace ws(model);
  double total = 0.0;
  for (std::size_t i = 0; i < continuation.size(); ++i) {
    detail::forward(model, rows, prefix.size() + i, ws);
    total += detail::log_prob(ws, continuation[i]);
  }
  return total;
}

double leak_loss(const TinyLM& model, std::span<const TokenSequence> shadow,
                 std::span<const Embedding> adversarial, std::size_t t,
                 Normalization mode) {
  return evaluate_leak(model, shadow, adversarial, t, mode, false).loss;
}

LossGradient leak_loss_and_gradients(const TinyLM& model,
                                     std::span<const TokenSequence> shadow,
                                     std::span<const Embedding> adversarial,
                                     std::size_t t, Normalization mode) {
  return evaluate_leak(model, shadow, adversarial, t, mode, true);
}

Embedding embedding_gradient(const TinyLM& model,
                             std::span<const TokenSequence> shadow,
                             std::span<const Embedding> adversarial,
                             std::size_t t, std::size_t position,
                             Normalization mode) {
  if (position >= adversarial.size()) {
    throw Error(ErrorCode::kInvalidInput,
                "adversarial position " + std::to_string(position) +
                    " out of range for m=" + std::to_string(adversarial.size()));
  }
  return evaluate_leak(model, shadow, adversarial, t, mode, true)
      .gradients[position];
}

std::vector<Embedding> embed_tokens(const TinyLM& model,
                                    std::span<const TokenId> tokens) {
  std::vector<Embedding> out;
  out.reserve(tokens.size());
  for (TokenId id : tokens) {
    auto row = model.embedding(id);
    out.emplace_back(row.begin(), row.end());
  }
  return out;
}

}  // namespace promptleak
