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

#include <filesystem>
#include <string>

#include "json.hpp"
#include "promptleak/app.hpp"
#include "promptleak/attack.hpp"

namespace promptleak::detail {

nlohmann::json attack_config_to_json(const AttackConfig& config);
// Missing keys keep the values already in `config`.
void attack_config_from_json(const nlohmann::json& node, AttackConfig& config);

MockRule mock_rule_from_json(const nlohmann::json& node);
nlohmann::json mock_rule_to_json(const MockRule& rule);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace promptleak::detail
