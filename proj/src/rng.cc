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

#include "pushsim/rng.h"

namespace pushsim {
namespace {

std::uint32_t Lo(std::uint64_t v) { return static_cast<std::uint32_t>(v); }
std::uint32_t Hi(std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); }

}  // namespace

Rng MakeStream(std::uint64_t master_seed, std::uint64_t node,
               StreamPurpose purpose, std::uint64_t iteration) {
  std::seed_seq seq{Lo(master_seed), Hi(master_seed),
                    Lo(node),        Hi(node),
                    static_cast<std::uint32_t>(purpose),
                    Lo(iteration),   Hi(iteration)};
  return Rng(seq);
}

Rng MakeSeededRng(std::uint64_t seed, std::uint64_t salt) {
  std::seed_seq seq{Lo(seed), Hi(seed), Lo(salt), Hi(salt), 0x5eedu};
  return Rng(seq);
}

}  // namespace pushsim
