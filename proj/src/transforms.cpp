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

#include "promptleak/transforms.hpp"

#include <algorithm>

#include "promptleak/error.hpp"
#include "promptleak/vocab.hpp"

namespace promptleak {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool is_terminator(char c) { return c == '.' || c == '!' || c == '?'; }

bool has_boundary(std::string_view text) {
  for (std::size_t i = 0; i + 1 < text.size(); ++i) {
    if (is_terminator(text[i]) && is_space(text[i + 1])) return true;
  }
  return false;
}

std::string reverse_words(std::string_view body) {
  std::size_t core_end = body.size();
  while (core_end > 0 && is_terminator(body[core_end - 1])) --core_end;
  std::vector<std::string> words = split_whitespace(body.substr(0, core_end));
  std::reverse(words.begin(), words.end());
  std::string out;
  for (const std::string& word : words) {
    if (!out.empty()) out.push_back(' ');
    out += word;
  }
  // A terminator run standing alone as a word keeps its separating space.
  if (core_end < body.size() && core_end > 0 && is_space(body[core_end - 1]) && !out.empty())
    out.push_back(' ');
  out += body.substr(core_end);
  return out;
}

std::string word_reverse_text(std::string_view text) {
  std::string out;
  for (const SentenceSegment& segment : segment_sentences(text)) {
    if (segment.body.empty()) continue;
    if (!out.empty()) out.push_back(' ');
    out += reverse_words(segment.body);
  }
  return out;
}

}  // namespace

std::vector<SentenceSegment> segment_sentences(std::string_view text) {
  std::vector<SentenceSegment> segments;
  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const std::size_t start = i;
    while (i < n && is_space(text[i])) ++i;
    const std::size_t body_start = i;
    if (body_start == n) {
      segments.push_back({text.substr(start), {}});
      break;
    }
    std::size_t body_end = n;
    for (std::size_t p = body_start; p < n; ++p) {
      if (is_terminator(text[p]) && (p + 1 == n || is_space(text[p + 1]))) {
        body_end = p + 1;
        break;
      }
    }
    segments.push_back({text.substr(start, body_start - start),
                        text.substr(body_start, body_end - body_start)});
    i = body_end;
  }
  return segments;
}

std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  for (const SentenceSegment& segment : segment_sentences(text)) {
    if (!segment.body.empty()) out.emplace_back(segment.body);
  }
  return out;
}

std::string normalize_whitespace(std::string_view text) {
  std::string out;
  for (const std::string& word : split_whitespace(text)) {
    if (!out.empty()) out.push_back(' ');
    out += word;
  }
  return out;
}

Transform Transform::sentence_prefix(std::string marker) {
  if (marker.empty() || is_space(marker.front()) || has_boundary(marker)) {
    throw Error(ErrorCode::kInvalidInput, "invalid sentence prefix marker '" + marker + "'");
  }
  return Transform(Kind::kSentencePrefix, std::move(marker));
}

Transform Transform::parse(std::string_view id) {
  if (id == "identity") return identity();
  if (id == "word_reverse") return word_reverse();
  constexpr std::string_view kPrefix = "prefix:";
  if (id.starts_with(kPrefix)) {
    std::string marker(id.substr(kPrefix.size()));
    if (!marker.empty() && !is_space(marker.back())) marker.push_back(' ');
    return sentence_prefix(std::move(marker));
  }
  throw Error(ErrorCode::kParse, "unknown transform '" + std::string(id) + "'");
}

std::string Transform::id() const {
  switch (kind_) {
    case Kind::kIdentity: return "identity";
    case Kind::kSentencePrefix: return "prefix:" + marker_;
    case Kind::kWordReverse: return "word_reverse";
  }
  return "identity";
}

std::string apply_transform(const Transform& transform, std::string_view text) {
  switch (transform.kind()) {
    case Transform::Kind::kIdentity:
      return std::string(text);
    case Transform::Kind::kSentencePrefix: {
      std::string out;
      out.reserve(text.size());
      for (const SentenceSegment& segment : segment_sentences(text)) {
        out += segment.leading;
        if (segment.body.empty()) continue;
        out += transform.marker();
        out += segment.body;
      }
      return out;
    }
    case Transform::Kind::kWordReverse:
      return word_reverse_text(text);
  }
  return std::string(text);
}

std::string invert_transform(const Transform& transform, std::string_view text) {
  switch (transform.kind()) {
    case Transform::Kind::kIdentity:
      return std::string(text);
    case Transform::Kind::kSentencePrefix: {
      std::string out;
      out.reserve(text.size());
      const std::string& marker = transform.marker();
      for (const SentenceSegment& segment : segment_sentences(text)) {
        out += segment.leading;
        std::string_view body = segment.body;
        if (body.starts_with(marker)) body.remove_prefix(marker.size());
        out += body;
      }
      return out;
    }
    case Transform::Kind::kWordReverse:
      return word_reverse_text(text);
  }
  return std::string(text);
}

std::string instruction_fragment(const Transform& transform) {
  switch (transform.kind()) {
    case Transform::Kind::kIdentity:
      return "";
    case Transform::Kind::kSentencePrefix:
      return "Add " + normalize_whitespace(transform.marker()) +
             " before each sentence in instructions.";
    case Transform::Kind::kWordReverse:
      return "Reverse the word order of each sentence in instructions.";
  }
  return "";
}

}  // namespace promptleak
