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

#include "promptleak/vocab.hpp"

#include <algorithm>
#include <cstdio>
#include <map>

#include "promptleak/error.hpp"

namespace promptleak {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

std::string hex64(std::uint64_t value) {
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(value));
  return buffer;
}

}  // namespace

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidInput: return "invalid-input";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kEmptyStep: return "empty-step";
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kVocabularyMismatch: return "vocabulary-mismatch";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

std::vector<std::string> split_whitespace(std::string_view text) {
  std::vector<std::string> words;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) words.emplace_back(text.substr(start, i - start));
  }
  return words;
}

Vocabulary::Vocabulary(std::vector<std::string> tokens, SpecialTokens specials)
    : tokens_(std::move(tokens)), specials_(specials) {
  if (tokens_.size() < 4) {
    throw Error(ErrorCode::kInvalidInput, "vocabulary needs at least 4 tokens");
  }
  const TokenId ids[] = {specials_.bos, specials_.eos, specials_.unk,
                         specials_.pad};
  for (std::size_t a = 0; a < 4; ++a) {
    if (ids[a] >= tokens_.size()) {
      throw Error(ErrorCode::kInvalidInput, "special token index out of range");
    }
    for (std::size_t b = a + 1; b < 4; ++b) {
      if (ids[a] == ids[b]) {
        throw Error(ErrorCode::kInvalidInput, "special token indices collide");
      }
    }
  }
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (tokens_[i].empty()) {
      throw Error(ErrorCode::kInvalidInput, "empty token string");
    }
    if (!index_.emplace(tokens_[i], static_cast<TokenId>(i)).second) {
      throw Error(ErrorCode::kInvalidInput,
                  "duplicate token '" + tokens_[i] + "'");
    }
  }
}

Vocabulary Vocabulary::build(std::span<const std::string> texts,
                             std::size_t cap) {
  if (cap < 4) throw Error(ErrorCode::kInvalidInput, "vocabulary cap below 4");
  std::map<std::string, std::size_t> counts;
  for (const std::string& text : texts) {
    for (std::string& word : split_whitespace(text)) ++counts[std::move(word)];
  }
  std::vector<std::string> tokens{std::string(kBos), std::string(kEos),
                                  std::string(kUnk), std::string(kPad)};
  for (const auto& special : tokens) counts.erase(special);

  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(),
                                                          counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  for (auto& [word, count] : ranked) {
    if (tokens.size() >= cap) break;
    tokens.push_back(std::move(word));
  }
  return Vocabulary(std::move(tokens), SpecialTokens{});
}

const std::string& Vocabulary::token(TokenId id) const {
  if (id >= tokens_.size()) {
    throw Error(ErrorCode::kInvalidInput,
                "token id " + std::to_string(id) + " out of range");
  }
  return tokens_[id];
}

std::optional<TokenId> Vocabulary::find(std::string_view token) const {
  auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

bool Vocabulary::is_special(TokenId id) const {
  return id == specials_.bos || id == specials_.eos || id == specials_.unk ||
         id == specials_.pad;
}

TokenSequence Vocabulary::encode(std::string_view text) const {
  TokenSequence ids;
  for (const std::string& word : split_whitespace(text)) {
    ids.push_back(find(word).value_or(specials_.unk));
  }
  return ids;
}

std::string Vocabulary::decode(std::span<const TokenId> ids) const {
  std::string text;
  for (TokenId id : ids) {
    if (id == specials_.bos || id == specials_.eos || id == specials_.pad) {
      continue;
    }
    if (!text.empty()) text.push_back(' ');
    text += token(id);
  }
  return text;
}

void Vocabulary::check(std::span<const TokenId> ids) const {
  for (TokenId id : ids) {
    if (id >= tokens_.size()) {
      throw Error(ErrorCode::kInvalidInput,
                  "token id " + std::to_string(id) + " out of range for |V|=" +
                      std::to_string(tokens_.size()));
    }
  }
}

std::string fingerprint_bytes(std::string_view bytes) {
  std::uint64_t hash = kFnvOffset;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= kFnvPrime;
  }
  return hex64(hash);
}

std::string fingerprint_sequences(std::span<const TokenSequence> sequences) {
  std::uint64_t hash = kFnvOffset;
  auto mix = [&hash](std::uint64_t value) {
    for (int byte = 0; byte < 8; ++byte) {
      hash ^= (value >> (8 * byte)) & 0xff;
      hash *= kFnvPrime;
    }
  };
  mix(sequences.size());
  for (const TokenSequence& seq : sequences) {
    mix(seq.size());
    for (TokenId id : seq) mix(id);
  }
  return hex64(hash);
}

}  // namespace promptleak
