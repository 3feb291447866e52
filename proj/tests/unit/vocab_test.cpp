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

#include <gtest/gtest.h>

#include "promptleak/error.hpp"

namespace promptleak {
namespace {

TEST(Vocabulary, BuildOrdersByFrequencyThenBytes) {
  const std::vector<std::string> texts{"b a c a", "c a"};
  const Vocabulary vocab = Vocabulary::build(texts);
  ASSERT_EQ(vocab.size(), 7u);
  EXPECT_EQ(vocab.token(0), "<bos>");
  EXPECT_EQ(vocab.token(3), "<pad>");
  EXPECT_EQ(vocab.token(4), "a");  // 3 occurrences
  EXPECT_EQ(vocab.token(5), "c");  // 2
  EXPECT_EQ(vocab.token(6), "b");  // 1
}

TEST(Vocabulary, CapLimitsSize) {
  const std::vector<std::string> texts{"a b c d e f"};
  EXPECT_EQ(Vocabulary::build(texts, 6).size(), 6u);
}

TEST(Vocabulary, EncodeFallsBackToUnkAndDecodeDropsControlTokens) {
  const std::vector<std::string> texts{"hello world"};
  const Vocabulary vocab = Vocabulary::build(texts);
  const TokenSequence ids = vocab.encode("hello  there\nworld");
  ASSERT_EQ(ids.size(), 3u);
  EXPECT_EQ(ids[1], vocab.unk());
  EXPECT_EQ(vocab.decode(ids), "hello <unk> world");
  const TokenSequence padded{vocab.bos(), ids[0], vocab.pad(), ids[2], vocab.eos()};
  EXPECT_EQ(vocab.decode(padded), "hello world");
}

TEST(Vocabulary, RejectsDuplicatesAndBadSpecials) {
  EXPECT_THROW(Vocabulary({"<bos>", "<eos>", "<unk>", "<pad>", "x", "x"}, {}), Error);
  EXPECT_THROW(Vocabulary({"<bos>", "<eos>", "<unk>"}, {}), Error);
  EXPECT_THROW(Vocabulary({"a", "b", "c", "d"}, SpecialTokens{0, 0, 2, 3}), Error);
}

TEST(Vocabulary, CheckNamesBadId) {
  const Vocabulary vocab({"<bos>", "<eos>", "<unk>", "<pad>"}, {});
  const TokenSequence bad{1, 9};
  try {
    vocab.check(bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidInput);
    EXPECT_NE(std::string(e.what()).find('9'), std::string::npos);
  }
}

TEST(Fingerprint, StableAndSensitive) {
  EXPECT_EQ(fingerprint_bytes("abc"), fingerprint_bytes("abc"));
  EXPECT_NE(fingerprint_bytes("abc"), fingerprint_bytes("abd"));
  // FNV-1a 64 of the empty string.
  EXPECT_EQ(fingerprint_bytes(""), "cbf29ce484222325");
}

}  // namespace
}  // namespace promptleak
