// Copyright 2026 The privform Authors
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

#include <Eigen/Dense>

#include "privform/graph.hpp"
#include "privform/privacy.hpp"

namespace privform::internal {

// Unchecked x̄(k) -> x̄(k+1); shared by step_private and the trial loop so
// both consume the random streams identically.
Eigen::MatrixXd advance_shifted(const Eigen::MatrixXd& shifted,
                                std::span<const WeightedEdge> edges,
                                const NoiseModel& noise, double gamma,
                                std::span<Rng> agent_rngs);

}  // namespace privform::internal
