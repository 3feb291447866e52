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

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>

#include "lm_internal.hpp"
#include "promptleak/error.hpp"
#include "promptleak/rng.hpp"

namespace promptleak {

DecodingStrategy DecodingStrategy::greedy(std::size_t max_new_tokens) {
  DecodingStrategy s;
  s.max_new_tokens = max_new_tokens;
  return s;
}

DecodingStrategy DecodingStrategy::beam(std::size_t beam_size,
                                        std::size_t max_new_tokens) {
  DecodingStrategy s;
  s.kind = DecodingKind::kBeam;
  s.beam_size = beam_size;
  s.max_new_tokens = max_new_tokens;
  return s;
}

DecodingStrategy DecodingStrategy::top_k_sampling(std::size_t k,
                                                  std::uint64_t seed,
                                                  std::size_t max_new_tokens) {
  DecodingStrategy s;
  s.kind = DecodingKind::kTopK;
  s.top_k = k;
  s.seed = seed;
  s.max_new_tokens = max_new_tokens;
  return s;
}

DecodingStrategy DecodingStrategy::top_p_sampling(double p, std::uint64_t seed,
                                                  std::size_t max_new_tokens) {
  DecodingStrategy s;
  s.kind = DecodingKind::kTopP;
  s.top_p = p;
  s.seed = seed;
  s.max_new_tokens = max_new_tokens;
  return s;
}

DecodingStrategy DecodingStrategy::beam_sample(std::size_t beam_size, double p,
                                               std::uint64_t seed,
                                               std::size_t max_new_tokens) {
  DecodingStrategy s;
  s.kind = DecodingKind::kBeamSample;
  s.beam_size = beam_size;
  s.top_p = p;
  s.seed = seed;
  s.max_new_tokens = max_new_tokens;
  return s;
}

namespace {

std::size_t parse_count(std::string_view text, std::string_view what) {
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kParse,
                "invalid " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

double parse_real(std::string_view text, std::string_view what) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw Error(ErrorCode::kParse,
                "invalid " + std::string(what) + " '" + std::string(text) + "'");
  }
  return value;
}

// Shortest text that parses back to the same double.
std::string format_real(double value) {
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, value);
  return std::string(buffer, result.ptr);
}

}  // namespace

DecodingStrategy DecodingStrategy::parse(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view head = text.substr(0, colon);
  const std::string_view arg =
      colon == std::string_view::npos ? std::string_view{} : text.substr(colon + 1);
  if (head == "greedy" && colon == std::string_view::npos) return greedy();
  if (head == "beam") return beam(parse_count(arg, "beam size"));
  if (head == "topk") return top_k_sampling(parse_count(arg, "top-k"), 0);
  if (head == "topp") return top_p_sampling(parse_real(arg, "top-p"), 0);
  if (head == "beamsample") {
    const auto comma = arg.find(',');
    if (comma == std::string_view::npos) {
      throw Error(ErrorCode::kParse, "beamsample expects '<b>,<p>'");
    }
    return beam_sample(parse_count(arg.substr(0, comma), "beam size"),
                       parse_real(arg.substr(comma + 1), "top-p"), 0);
  }
  throw Error(ErrorCode::kParse, "unknown decoding strategy '" + std::string(text) + "'");
}

std::string DecodingStrategy::to_string() const {
  switch (kind) {
    case DecodingKind::kGreedy: return "greedy";
    case DecodingKind::kBeam: return "beam:" + std::to_string(beam_size);
    case DecodingKind::kTopK: return "topk:" + std::to_string(top_k);
    case DecodingKind::kTopP: return "topp:" + format_real(top_p);
    case DecodingKind::kBeamSample:
      return "beamsample:" + std::to_string(beam_size) + "," + format_real(top_p);
  }
  return "greedy";
}

void DecodingStrategy::validate(std::size_t vocab_size) const {
  if (max_new_tokens < 1) {
    throw Error(ErrorCode::kInvalidInput, "max_new_tokens must be >= 1");
  }
  if ((kind == DecodingKind::kBeam || kind == DecodingKind::kBeamSample) &&
      beam_size < 1) {
    throw Error(ErrorCode::kInvalidInput, "beam size must be >= 1");
  }
  if (kind == DecodingKind::kTopK && (top_k < 1 || top_k > vocab_size)) {
    throw Error(ErrorCode::kInvalidInput, "top-k must be in [1, |V|]");
  }
  if ((kind == DecodingKind::kTopP || kind == DecodingKind::kBeamSample) &&
      !(top_p > 0.0 && top_p <= 1.0)) {
    throw Error(ErrorCode::kInvalidInput, "top-p must be in (0, 1]");
  }
}

TokenId argmax_token(std::span<const double> dist) {
  return static_cast<TokenId>(std::max_element(dist.begin(), dist.end()) -
                              dist.begin());
}

namespace {

// Token ids sorted by descending probability, ties by ascending id.
std::vector<TokenId> rank_tokens(std::span<const double> dist) {
  std::vector<TokenId> order(dist.size());
  std::iota(order.begin(), order.end(), TokenId{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](TokenId a, TokenId b) { return dist[a] > dist[b]; });
  return order;
}

std::size_t kept_count(std::span<const double> dist,
                       const std::vector<TokenId>& order, TruncationMode mode) {
  if (const auto* k = std::get_if<TopK>(&mode)) {
    if (k->k < 1) throw Error(ErrorCode::kInvalidInput, "top-k must be >= 1");
    return std::min(k->k, dist.size());
  }
  const double p = std::get<TopP>(mode).p;
  if (!(p > 0.0 && p <= 1.0)) {
    throw Error(ErrorCode::kInvalidInput, "top-p must be in (0, 1]");
  }
  double mass = 0.0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    mass += dist[order[i]];
    if (mass >= p) return i + 1;
  }
  return order.size();
}

std::size_t sample_index(std::span<const double> dist, Rng& rng) {
  const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
  const double u = rng.uniform01() * total;
  double cumulative = 0.0;
  std::size_t last = 0;
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] <= 0.0) continue;
    last = i;
    cumulative += dist[i];
    if (u < cumulative) return i;
  }
  return last;
}

class StepModel {
 public:
  explicit StepModel(const TinyLM& model) : model_(model), ws_(model) {}

  // Distribution after `tokens`; also leaves log-probs accessible.
  const std::vector<double>& dist(const TokenSequence& tokens) {
    rows_.clear();
    for (TokenId id : tokens) rows_.push_back(model_.embedding(id).data());
    detail::forward(model_, rows_, rows_.size(), ws_);
    return ws_.probs;
  }
  double log_prob(TokenId id) const { return detail::log_prob(ws_, id); }

 private:
  const TinyLM& model_;
  detail::Workspace ws_;
  std::vector<const double*> rows_;
};

Response decode_single_path(const TinyLM& model, std::span<const TokenId> prompt,
                            const DecodingStrategy& strategy) {
  StepModel step(model);
  TokenSequence context(prompt.begin(), prompt.end());
  Response response;
  Rng rng(strategy.seed, 0);
  for (std::size_t n = 0; n < strategy.max_new_tokens; ++n) {
    const std::vector<double>& dist = step.dist(context);
    TokenId next;
    if (strategy.kind == DecodingKind::kGreedy) {
      next = argmax_token(dist);
    } else {
      const TruncationMode mode = strategy.kind == DecodingKind::kTopK
                                      ? TruncationMode{TopK{strategy.top_k}}
                                      : TruncationMode{TopP{strategy.top_p}};
      next = static_cast<TokenId>(sample_index(truncated_renormalize(dist, mode), rng));
    }
    response.log_prob += step.log_prob(next);
    if (next == model.vocab().eos()) {
      response.finish = FinishReason::kEos;
      return response;
    }
    response.tokens.push_back(next);
    context.push_back(next);
  }
  response.finish = FinishReason::kLength;
  return response;
}

struct Hypothesis {
  TokenSequence tokens;
  double score = 0.0;
};

struct Extension {
  std::size_t parent;
  TokenId token;
  double score;
};

Response decode_beam(const TinyLM& model, std::span<const TokenId> prompt,
                     const DecodingStrategy& strategy) {
  const bool sampled = strategy.kind == DecodingKind::kBeamSample;
  const std::size_t width = strategy.beam_size;
  const TokenId eos = model.vocab().eos();
  StepModel step(model);
  Rng rng(strategy.seed, 0);
  const TokenSequence base(prompt.begin(), prompt.end());

  std::vector<Hypothesis> live{Hypothesis{}};
  std::vector<Hypothesis> frozen;
  std::vector<Extension> extensions;
  TokenSequence context;

  for (std::size_t n = 0; n < strategy.max_new_tokens && !live.empty(); ++n) {
    extensions.clear();
    for (std::size_t h = 0; h < live.size(); ++h) {
      context = base;
      context.insert(context.end(), live[h].tokens.begin(), live[h].tokens.end());
      const std::vector<double>& dist = step.dist(context);
      if (!sampled) {
        for (TokenId v = 0; v < dist.size(); ++v) {
          extensions.push_back({h, v, live[h].score + step.log_prob(v)});
        }
        continue;
      }
      // Draw up to `width` distinct tokens from the top-p-truncated step
      // distribution, removing each draw before the next.
      std::vector<double> pool = truncated_renormalize(dist, TopP{strategy.top_p});
      for (std::size_t draw = 0; draw < width; ++draw) {
        if (std::all_of(pool.begin(), pool.end(), [](double p) { return p <= 0.0; })) {
          break;
        }
        const auto v = static_cast<TokenId>(sample_index(pool, rng));
        pool[v] = 0.0;
        extensions.push_back({h, v, live[h].score + step.log_prob(v)});
      }
    }
    // Stable sort keeps (parent, token) generation order among equal scores.
    std::stable_sort(extensions.begin(), extensions.end(),
                     [](const Extension& a, const Extension& b) {
                       return a.score > b.score;
                     });
    std::vector<Hypothesis> next_live;
    const std::size_t keep = std::min(width, extensions.size());
    for (std::size_t i = 0; i < keep; ++i) {
      const Extension& ext = extensions[i];
      Hypothesis hyp{live[ext.parent].tokens, ext.score};
      if (ext.token == eos) {
        frozen.push_back(std::move(hyp));
      } else {
        hyp.tokens.push_back(ext.token);
        next_live.push_back(std::move(hyp));
      }
    }
    live = std::move(next_live);
    if (frozen.size() >= width) break;
  }

  Response best;
  bool found = false;
  auto consider = [&](const Hypothesis& hyp, FinishReason reason) {
    if (!found || hyp.score > best.log_prob) {
      best.tokens = hyp.tokens;
      best.log_prob = hyp.score;
      best.finish = reason;
      found = true;
    }
  };
  for (const Hypothesis& hyp : frozen) consider(hyp, FinishReason::kEos);
  for (const Hypothesis& hyp : live) consider(hyp, FinishReason::kLength);
  return best;
}

}  // namespace

std::vector<double> truncated_renormalize(std::span<const double> dist,
                                          TruncationMode mode) {
  const std::vector<TokenId> order = rank_tokens(dist);
  const std::size_t keep = kept_count(dist, order, mode);
  if (keep >= dist.size()) return {dist.begin(), dist.end()};
  std::vector<double> out(dist.size(), 0.0);
  double mass = 0.0;
  for (std::size_t i = 0; i < keep; ++i) mass += dist[order[i]];
  for (std::size_t i = 0; i < keep; ++i) out[order[i]] = dist[order[i]] / mass;
  return out;
}

Response decode(const TinyLM& model, std::span<const TokenId> prompt,
                const DecodingStrategy& strategy) {
  model.vocab().check(prompt);
  strategy.validate(model.vocab_size());
  switch (strategy.kind) {
    case DecodingKind::kGreedy:
    case DecodingKind::kTopK:
    case DecodingKind::kTopP:
      return decode_single_path(model, prompt, strategy);
    case DecodingKind::kBeam:
    case DecodingKind::kBeamSample:
      return decode_beam(model, prompt, strategy);
  }
  return {};
}

}  // namespace promptleak
