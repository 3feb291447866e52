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

#include "promptleak/checkpoint.hpp"

#include <gtest/gtest.h>

#include <filesystem>

#include "promptleak/error.hpp"
#include "support/oracles.hpp"

namespace promptleak {
namespace {

TEST(Base64, KnownEncodings) {
  EXPECT_EQ(base64_encode_doubles({1.0}), "AAAAAAAA8D8=");
  EXPECT_EQ(base64_encode_doubles({}), "");
  const std::vector<double> values{0.0, -0.0, 1e-300, -2.5, 3.141592653589793};
  const std::vector<double> back = base64_decode_doubles(base64_encode_doubles(values));
  ASSERT_EQ(back.size(), values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    EXPECT_EQ(std::bit_cast<std::uint64_t>(back[i]), std::bit_cast<std::uint64_t>(values[i]));
  }
  EXPECT_THROW(base64_decode_doubles("AAAA"), Error);    // 3 bytes, not a whole double
  EXPECT_THROW(base64_decode_doubles("A*AAAAAA8D8="), Error);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const TinyLM model = oracle::random_model(13, LmDims{5, 4, 6}, 21);
  const Checkpoint saved{model, 21, "abc"};
  const auto path = std::filesystem::temp_directory_path() / "promptleak_ckpt_test.json";
  save_checkpoint(saved, path);
  const Checkpoint loaded = load_checkpoint(path);
  std::filesystem::remove(path);
  EXPECT_TRUE(loaded.model == model);
  EXPECT_EQ(loaded.seed, 21u);
  EXPECT_EQ(loaded.corpus_fingerprint, "abc");
  EXPECT_EQ(checkpoint_to_string(loaded), checkpoint_to_string(saved));
  Rng rng(4);
  for (int i = 0; i < 100; ++i) {
    const TokenSequence ctx = oracle::random_tokens(rng, rng.uniform_below(7), 13);
    EXPECT_EQ(next_token_dist(model, ctx), next_token_dist(loaded.model, ctx));
  }
  EXPECT_EQ(model_fingerprint(model), model_fingerprint(loaded.model));
}

TEST(Checkpoint, RejectsMalformedDocuments) {
  EXPECT_THROW(checkpoint_from_string("{"), Error);
  EXPECT_THROW(checkpoint_from_string("{}"), Error);
  const TinyLM model = oracle::random_model(6, LmDims{2, 2, 2}, 1);
  std::string text = checkpoint_to_string(Checkpoint{model, 1, ""});
  text.replace(text.find("\"format_version\": 1"), 19, "\"format_version\": 9");
  EXPECT_THROW(checkpoint_from_string(text), Error);
  EXPECT_THROW(load_checkpoint("/nonexistent/ckpt.json"), Error);
}

}  // namespace
}  // namespace promptleak
