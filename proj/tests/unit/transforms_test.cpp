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

#include <gtest/gtest.h>

#include "promptleak/error.hpp"
#include "support/oracles.hpp"

namespace promptleak {
namespace {

TEST(Segmentation, SplitsOnTerminatorsFollowedBySpace) {
  EXPECT_EQ(split_sentences("A b. C d! e?f g"), (std::vector<std::string>{"A b.", "C d!", "e?f g"}));
  EXPECT_EQ(split_sentences("a.b.c"), (std::vector<std::string>{"a.b.c"}));
  EXPECT_TRUE(split_sentences("  \n ").empty());
  EXPECT_EQ(normalize_whitespace("  a \t b\n"), "a b");
}

TEST(Transform, Examples) {
  const Transform prefix = Transform::sentence_prefix();
  EXPECT_EQ(apply_transform(prefix, "A b. C d."), "@ A b. @ C d.");
  EXPECT_EQ(apply_transform(Transform::word_reverse(), "one two three."), "three two one.");
  EXPECT_EQ(apply_transform(Transform::identity(), " x  y "), " x  y ");
  EXPECT_EQ(invert_transform(prefix, "@ Hello there. no marker here."), "Hello there. no marker here.");
}

TEST(Transform, Fragments) {
  EXPECT_EQ(instruction_fragment(Transform::identity()), "");
  EXPECT_EQ(instruction_fragment(Transform::sentence_prefix("@ ")),
            "Add @ before each sentence in instructions.");
  EXPECT_EQ(instruction_fragment(Transform::word_reverse()),
            "Reverse the word order of each sentence in instructions.");
}

TEST(Transform, ParseAndIds) {
  EXPECT_EQ(Transform::parse("prefix:@"), Transform::sentence_prefix("@ "));
  EXPECT_EQ(Transform::parse("prefix:@ ").id(), "prefix:@ ");
  EXPECT_EQ(Transform::parse("word_reverse").kind(), Transform::Kind::kWordReverse);
  EXPECT_THROW(Transform::parse("rot13"), Error);
  EXPECT_THROW(Transform::sentence_prefix(""), Error);
  EXPECT_THROW(Transform::sentence_prefix(" @"), Error);
  EXPECT_THROW(Transform::sentence_prefix("x. y"), Error);
}

TEST(Transform, RoundTripOnCanonicalFuzz) {
  Rng rng(77);
  const std::vector<Transform> all{Transform::identity(), Transform::sentence_prefix(),
                                   Transform::sentence_prefix("##: "), Transform::word_reverse()};
  for (int i = 0; i < 300; ++i) {
    const std::string x = normalize_whitespace(oracle::fuzz_text(rng));
    for (const Transform& t : all) {
      EXPECT_EQ(invert_transform(t, apply_transform(t, x)), x) << t.id() << " on '" << x << "'";
    }
  }
}

TEST(Transform, PrefixRoundTripKeepsRawWhitespace) {
  Rng rng(78);
  const Transform t = Transform::sentence_prefix();
  for (int i = 0; i < 300; ++i) {
    const std::string x = oracle::fuzz_text(rng);
    EXPECT_EQ(invert_transform(t, apply_transform(t, x)), x);
  }
}

TEST(Transform, WordReverseIsAnInvolutionUpToSpacing) {
  Rng rng(79);
  const Transform t = Transform::word_reverse();
  for (int i = 0; i < 300; ++i) {
    const std::string x = oracle::fuzz_text(rng);
    EXPECT_EQ(apply_transform(t, apply_transform(t, x)), normalize_whitespace(x));
  }
  EXPECT_EQ(apply_transform(t, "x . y"), "x . y");
}

}  // namespace
}  // namespace promptleak
