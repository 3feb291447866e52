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

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "promptleak/lm.hpp"

namespace promptleak {

// A serialized TinyLM plus the provenance needed to reproduce it.
//
// On disk this is a JSON document:
//   format_version, vocab {tokens, specials}, dims {d, C, H, V},
//   parameters {name: {shape, data}} with data the base64 encoding of the
//   little-endian IEEE-754 doubles, seed, corpus_fingerprint.
struct Checkpoint {
  static constexpr int kFormatVersion = 1;

  TinyLM model;
  std::uint64_t seed = 0;
  std::string corpus_fingerprint;
};

std::string checkpoint_to_string(const Checkpoint& checkpoint);
Checkpoint checkpoint_from_string(std::string_view text);

void save_checkpoint(const Checkpoint& checkpoint,
                     const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Fingerprint of the full serialized model, used to label reports.
std::string model_fingerprint(const TinyLM& model);

std::string base64_encode_doubles(const std::vector<double>& values);
std::vector<double> base64_decode_doubles(std::string_view text);

}  // namespace promptleak
