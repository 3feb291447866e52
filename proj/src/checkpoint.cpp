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

#include <array>
#include <bit>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "promptleak/error.hpp"

namespace promptleak {

namespace {

using nlohmann::json;

constexpr char kAlphabet[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string base64_encode(const std::vector<unsigned char>& bytes) {
  std::string out;
  out.reserve((bytes.size() + 2) / 3 * 4);
  std::size_t i = 0;
  for (; i + 2 < bytes.size(); i += 3) {
    const std::uint32_t triple = (bytes[i] << 16) | (bytes[i + 1] << 8) | bytes[i + 2];
    out.push_back(kAlphabet[(triple >> 18) & 63]);
    out.push_back(kAlphabet[(triple >> 12) & 63]);
    out.push_back(kAlphabet[(triple >> 6) & 63]);
    out.push_back(kAlphabet[triple & 63]);
  }
  const std::size_t rest = bytes.size() - i;
  if (rest > 0) {
    std::uint32_t triple = bytes[i] << 16;
    if (rest == 2) triple |= bytes[i + 1] << 8;
    out.push_back(kAlphabet[(triple >> 18) & 63]);
    out.push_back(kAlphabet[(triple >> 12) & 63]);
    out.push_back(rest == 2 ? kAlphabet[(triple >> 6) & 63] : '=');
    out.push_back('=');
  }
  return out;
}

std::vector<unsigned char> base64_decode(std::string_view text) {
  std::array<int, 256> lookup;
  lookup.fill(-1);
  for (int i = 0; i < 64; ++i) lookup[static_cast<unsigned char>(kAlphabet[i])] = i;
  if (text.size() % 4 != 0) {
    throw Error(ErrorCode::kParse, "base64 length is not a multiple of 4");
  }
  std::vector<unsigned char> out;
  out.reserve(text.size() / 4 * 3);
  for (std::size_t i = 0; i < text.size(); i += 4) {
    std::uint32_t triple = 0;
    int pad = 0;
    for (std::size_t k = 0; k < 4; ++k) {
      const char ch = text[i + k];
      if (ch == '=' && i + 4 == text.size() && k >= 2) {
        ++pad;
        triple <<= 6;
        continue;
      }
      const int value = lookup[static_cast<unsigned char>(ch)];
      if (value < 0 || pad > 0) throw Error(ErrorCode::kParse, "invalid base64 input");
      triple = (triple << 6) | static_cast<std::uint32_t>(value);
    }
    out.push_back((triple >> 16) & 0xff);
    if (pad < 2) out.push_back((triple >> 8) & 0xff);
    if (pad < 1) out.push_back(triple & 0xff);
  }
  return out;
}

json encode_array(const std::vector<double>& values, std::size_t rows,
                  std::size_t cols) {
  return json{{"shape", {rows, cols}}, {"data", base64_encode_doubles(values)}};
}

std::vector<double> decode_array(const json& node, const char* name,
                                 std::size_t rows, std::size_t cols) {
  const json& entry = node.at(name);
  const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
  if (shape.size() != 2 || shape[0] != rows || shape[1] != cols) {
    throw Error(ErrorCode::kParse, std::string("parameter '") + name +
                                       "' has an unexpected shape");
  }
  std::vector<double> values =
      base64_decode_doubles(entry.at("data").get<std::string>());
  if (values.size() != rows * cols) {
    throw Error(ErrorCode::kParse, std::string("parameter '") + name +
                                       "' has the wrong element count");
  }
  return values;
}

}  // namespace

std::string base64_encode_doubles(const std::vector<double>& values) {
  std::vector<unsigned char> bytes;
  bytes.reserve(values.size() * 8);
  for (double value : values) {
    const auto bits = std::bit_cast<std::uint64_t>(value);
    for (int b = 0; b < 8; ++b) bytes.push_back((bits >> (8 * b)) & 0xff);
  }
  return base64_encode(bytes);
}

std::vector<double> base64_decode_doubles(std::string_view text) {
  const std::vector<unsigned char> bytes = base64_decode(text);
  if (bytes.size() % 8 != 0) {
    throw Error(ErrorCode::kParse, "decoded byte count is not a multiple of 8");
  }
  std::vector<double> values(bytes.size() / 8);
  for (std::size_t i = 0; i < values.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      bits |= std::uint64_t{bytes[i * 8 + b]} << (8 * b);
    }
    values[i] = std::bit_cast<double>(bits);
  }
  return values;
}

std::string checkpoint_to_string(const Checkpoint& checkpoint) {
  const TinyLM& model = checkpoint.model;
  const auto& specials = model.vocab().specials();
  const std::size_t v = model.vocab_size();
  const std::size_t d = model.embed_dim();
  const std::size_t h = model.hidden();
  json doc;
  doc["format_version"] = Checkpoint::kFormatVersion;
  doc["vocab"] = {{"tokens", model.vocab().tokens()},
                  {"specials",
                   {{"bos", specials.bos},
                    {"eos", specials.eos},
                    {"unk", specials.unk},
                    {"pad", specials.pad}}}};
  doc["dims"] = {{"d", d}, {"C", model.context()}, {"H", h}, {"V", v}};
  doc["parameters"] = {
      {"embeddings", encode_array(model.embeddings(), v, d)},
      {"hidden_weights", encode_array(model.hidden_weights(), model.input_size(), h)},
      {"hidden_bias", encode_array(model.hidden_bias(), 1, h)},
      {"output_weights", encode_array(model.output_weights(), h, v)},
      {"output_bias", encode_array(model.output_bias(), 1, v)},
  };
  doc["seed"] = checkpoint.seed;
  doc["corpus_fingerprint"] = checkpoint.corpus_fingerprint;
  return doc.dump(2) + "\n";
}

Checkpoint checkpoint_from_string(std::string_view text) {
  try {
    const json doc = json::parse(text);
    const int version = doc.at("format_version").get<int>();
    if (version != Checkpoint::kFormatVersion) {
      throw Error(ErrorCode::kParse,
                  "unsupported checkpoint format_version " + std::to_string(version));
    }
    const json& vocab_node = doc.at("vocab");
    const json& sp = vocab_node.at("specials");
    Vocabulary vocab(vocab_node.at("tokens").get<std::vector<std::string>>(),
                     SpecialTokens{sp.at("bos").get<TokenId>(),
                                   sp.at("eos").get<TokenId>(),
                                   sp.at("unk").get<TokenId>(),
                                   sp.at("pad").get<TokenId>()});
    const json& dims_node = doc.at("dims");
    LmDims dims{dims_node.at("d").get<std::size_t>(),
                dims_node.at("C").get<std::size_t>(),
                dims_node.at("H").get<std::size_t>()};
    if (dims_node.at("V").get<std::size_t>() != vocab.size()) {
      throw Error(ErrorCode::kParse, "dims.V does not match the vocabulary size");
    }
    Checkpoint checkpoint{TinyLM(std::move(vocab), dims),
                          doc.at("seed").get<std::uint64_t>(),
                          doc.at("corpus_fingerprint").get<std::string>()};
    TinyLM& model = checkpoint.model;
    const std::size_t v = model.vocab_size();
    const std::size_t h = dims.hidden;
    const json& params = doc.at("parameters");
    model.embeddings() = decode_array(params, "embeddings", v, dims.embed_dim);
    model.hidden_weights() =
        decode_array(params, "hidden_weights", model.input_size(), h);
    model.hidden_bias() = decode_array(params, "hidden_bias", 1, h);
    model.output_weights() = decode_array(params, "output_weights", h, v);
    model.output_bias() = decode_array(params, "output_bias", 1, v);
    if (!model.all_finite()) {
      throw Error(ErrorCode::kParse, "checkpoint contains non-finite parameters");
    }
    return checkpoint;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& checkpoint,
                     const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << checkpoint_to_string(checkpoint);
  if (!out) throw Error(ErrorCode::kIo, "failed writing " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return checkpoint_from_string(buffer.str());
}

std::string model_fingerprint(const TinyLM& model) {
  return fingerprint_bytes(checkpoint_to_string(Checkpoint{model, 0, ""}));
}

}  // namespace promptleak
