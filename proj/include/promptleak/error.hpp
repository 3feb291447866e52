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

#include <stdexcept>
#include <string>
#include <utility>

namespace promptleak {

enum class ErrorCode {
  kInvalidInput,
  kDimensionMismatch,
  kEmptyStep,
  kEmptyInput,
  kParse,
  kIo,
  kVocabularyMismatch,
  kConfig,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Raised by the experiment harness; carries the pipeline stage and, when
// known, the dataset record that was being processed.
class StageError : public Error {
 public:
  StageError(ErrorCode code, std::string stage, std::string record_id,
             const std::string& what)
      : Error(code, "[" + stage + (record_id.empty() ? "" : ":" + record_id) +
                        "] " + what),
        stage_(std::move(stage)),
        record_id_(std::move(record_id)) {}

  const std::string& stage() const { return stage_; }
  const std::string& record_id() const { return record_id_; }

 private:
  std::string stage_;
  std::string record_id_;
};

}  // namespace promptleak
