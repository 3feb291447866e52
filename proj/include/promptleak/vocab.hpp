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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace promptleak {

using TokenId = std::uint32_t;
using TokenSequence = std::vector<TokenId>;

struct SpecialTokens {
  TokenId bos = 0;
  TokenId eos = 1;
  TokenId unk = 2;
  TokenId pad = 3;
};

// Closed word-level vocabulary. Tokens are whitespace-delimited strings; the
// four special tokens occupy fixed slots recorded in SpecialTokens.
class Vocabulary {
 public:
  static constexpr std::string_view kBos = "<bos>";
  static constexpr std::string_view kEos = "<eos>";
  static constexpr std::string_view kUnk = "<unk>";
  static constexpr std::string_view kPad = "<pad>";
  static constexpr std::size_t kDefaultCap = 512;

  // Validates uniqueness and that every special index is in range and
  // distinct. Throws Error(kInvalidInput) otherwise.
  Vocabulary(std::vector<std::string> tokens, SpecialTokens specials);

  // Specials at ids 0..3, then corpus words by descending frequency (ties by
  // byte order) until `cap` entries in total.
  static Vocabulary build(std::span<const std::string> texts,
                          std::size_t cap = kDefaultCap);

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const;
  std::optional<TokenId> find(std::string_view token) const;
  const std::vector<std::string>& tokens() const { return tokens_; }
  const SpecialTokens& specials() const { return specials_; }
  TokenId bos() const { return specials_.bos; }
  TokenId eos() const { return specials_.eos; }
  TokenId unk() const { return specials_.unk; }
  TokenId pad() const { return specials_.pad; }
  bool is_special(TokenId id) const;

  // Whitespace split; out-of-vocabulary words map to UNK.
  TokenSequence encode(std::string_view text) const;
  // Space-joined token strings; BOS, EOS and PAD are dropped.
  std::string decode(std::span<const TokenId> ids) const;

  // Throws Error(kInvalidInput) naming the first id outside [0, size()).
  void check(std::span<const TokenId> ids) const;

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_ && specials_.bos == other.specials_.bos &&
           specials_.eos == other.specials_.eos &&
           specials_.unk == other.specials_.unk &&
           specials_.pad == other.specials_.pad;
  }

 private:
  std::vector<std::string> tokens_;
  SpecialTokens specials_;
  std::unordered_map<std::string, TokenId> index_;
};

std::vector<std::string> split_whitespace(std::string_view text);

// 64-bit FNV-1a, hex encoded. Used for corpus and model fingerprints.
std::string fingerprint_bytes(std::string_view bytes);
std::string fingerprint_sequences(std::span<const TokenSequence> sequences);

}  // namespace promptleak
