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

#include <cstdint>
#include <random>

namespace privform {

using Rng = std::mt19937_64;

// Seed splitting. A child seed is splitmix64(root + golden * (stream + 1));
// streams are numbered by the caller (trial index, multi-start index, ...).
// Nested splits compose: split_seed(split_seed(root, trial), agent).
std::uint64_t split_seed(std::uint64_t root, std::uint64_t stream);

inline Rng make_rng(std::uint64_t root, std::uint64_t stream) {
  return Rng(split_seed(root, stream));
}

}  // namespace privform
