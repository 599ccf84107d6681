// Copyright 2026 The pushsim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef PUSHSIM_RNG_H_
#define PUSHSIM_RNG_H_

#include <cstdint>
#include <random>

namespace pushsim {

using Rng = std::mt19937_64;

// Independent randomness consumers inside one node.
enum class StreamPurpose : std::uint32_t {
  kSampling = 1,
  kCompression = 2,
  kNoise = 3,
};

// Substream for (node, purpose, iteration) derived from the master seed.
// Every random quantity in a simulation is drawn from exactly one of these,
// so the node-local engine and the matrix oracle see identical draws.
Rng MakeStream(std::uint64_t master_seed, std::uint64_t node,
               StreamPurpose purpose, std::uint64_t iteration);

// Generic seeded stream for data synthesis and shuffles.
Rng MakeSeededRng(std::uint64_t seed, std::uint64_t salt = 0);

}  // namespace pushsim

#endif  // PUSHSIM_RNG_H_
