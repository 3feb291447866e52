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

#include <string>
#include <string_view>
#include <vector>

namespace promptleak {

// One sentence of a text together with the whitespace in front of it. A
// sentence ends at '.', '!' or '?' followed by whitespace or end of text, or
// at end of text. Concatenating leading + body over all segments reproduces
// the input; trailing whitespace shows up as a final segment with an empty
// body.
struct SentenceSegment {
  std::string_view leading;
  std::string_view body;
};

std::vector<SentenceSegment> segment_sentences(std::string_view text);

// Non-empty sentence bodies, in order.
std::vector<std::string> split_sentences(std::string_view text);

// Collapses whitespace runs to one space and trims both ends.
std::string normalize_whitespace(std::string_view text);

// An output-obfuscating rewrite the attacker asks for in the query, with
// an exact inverse applied to the response.
class Transform {
 public:
  enum class Kind { kIdentity, kSentencePrefix, kWordReverse };

  static constexpr std::string_view kDefaultMarker = "@ ";

  static Transform identity() { return Transform(Kind::kIdentity, ""); }
  // The marker must be non-empty, must not start with whitespace and must
  // not contain a sentence boundary. Throws Error(kInvalidInput) otherwise.
  static Transform sentence_prefix(std::string marker = std::string(kDefaultMarker));
  static Transform word_reverse() { return Transform(Kind::kWordReverse, ""); }

  // "identity", "prefix:<marker>", "word_reverse". A prefix marker without
  // trailing whitespace gets a single space appended.
  static Transform parse(std::string_view id);

  Kind kind() const { return kind_; }
  const std::string& marker() const { return marker_; }
  std::string id() const;

  bool operator==(const Transform&) const = default;

 private:
  Transform(Kind kind, std::string marker) : kind_(kind), marker_(std::move(marker)) {}

  Kind kind_;
  std::string marker_;
};

// sentence_prefix puts the marker in front of every sentence and keeps all
// whitespace; word_reverse reverses the words of each sentence (terminal
// punctuation stays at the end) and joins sentences with single spaces.
std::string apply_transform(const Transform& transform, std::string_view text);

// Inverse of apply_transform. Sentences without the marker pass through.
std::string invert_transform(const Transform& transform, std::string_view text);

// The instruction asking a model to perform the transform; empty for
// identity.
std::string instruction_fragment(const Transform& transform);

}  // namespace promptleak
