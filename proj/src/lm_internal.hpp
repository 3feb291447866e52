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

#include <span>
#include <vector>

#include "promptleak/lm.hpp"

namespace promptleak::detail {

// Scratch buffers for one forward/backward pass through the MLP.
struct Workspace {
  explicit Workspace(const TinyLM& model);

  std::vector<double> x;        // C*d window input
  std::vector<double> h;        // H tanh activations
  std::vector<double> logits;   // |V|
  std::vector<double> probs;    // |V|
  double log_norm = 0.0;        // logsumexp(logits)
  std::vector<double> dlogits;  // |V|
  std::vector<double> dz;       // H, gradient at the pre-activation
  std::vector<double> dx;       // C*d
};

// Gathers the window that predicts position `position` of `rows` (the
// window covers rows[position-C, position), BOS rows fill the gap on the
// left) into ws.x and runs the forward pass.
void forward(const TinyLM& model, std::span<const double* const> rows,
             std::size_t position, Workspace& ws);

inline double log_prob(const Workspace& ws, TokenId target) {
  return ws.logits[target] - ws.log_norm;
}

// Backpropagates -log p[target] down to the hidden pre-activation (ws.dz).
void backward_hidden(const TinyLM& model, TokenId target, Workspace& ws);

// d(-log p[target]) / d(window slot `slot`), written to `out` (d entries).
// Requires backward_hidden to have run.
void input_gradient(const TinyLM& model, std::size_t slot, const Workspace& ws,
                    std::span<double> out);

// Gradient for all window slots into ws.dx.
void input_gradient_all(const TinyLM& model, Workspace& ws);

}  // namespace promptleak::detail
