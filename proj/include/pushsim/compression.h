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

#ifndef PUSHSIM_COMPRESSION_H_
#define PUSHSIM_COMPRESSION_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pushsim/rng.h"
#include "pushsim/vec.h"

namespace pushsim {

enum class CompressorKind { kIdentity, kRand, kGsgd };

// A contractive compression operator Q with E||Q(x) - x||^2 <= omega^2 ||x||^2.
//   identity: exact transmission.
//   rand_a:   keep floor(a * d) uniformly chosen coordinates, zero the rest.
//   gsgd_b:   stochastic dithering onto 2^(b-1) levels of |x_k| / ||x||.
struct CompressorSpec {
  CompressorKind kind = CompressorKind::kIdentity;
  double a = 1.0;       // kept fraction, rand only
  int b = 8;            // bits per coordinate, gsgd only
  std::size_t d = 0;    // vector dimension
  int float_width = 32; // bits per raw scalar

  static CompressorSpec Identity(std::size_t d, int float_width = 32);
  static CompressorSpec Rand(double a, std::size_t d, int float_width = 32);
  static CompressorSpec Gsgd(int b, std::size_t d, int float_width = 32);

  // "identity", "rand_0.5", "gsgd_8".
  std::string Label() const;
};

// Parses a label produced by CompressorSpec::Label().
CompressorSpec ParseCompressor(std::string_view label, std::size_t d,
                               int float_width = 32);

CompressorKind ParseCompressorKind(std::string_view name);

// Throws ValidationError if the spec is malformed or its coefficient is not
// strictly below 1.
void ValidateCompressor(const CompressorSpec& spec);

// Contraction coefficient. rand_a yields 1 - floor(a d) / d, which equals
// 1 - a whenever a d is integral.
double OmegaSq(const CompressorSpec& spec);

// Coordinates kept by rand_a.
std::size_t KeptCount(const CompressorSpec& spec);

// Bits to ship one compressed vector (gsgd includes the norm).
std::int64_t MessageBits(const CompressorSpec& spec);

// Same, but gsgd counts only the (b - 1) + 1 bits per coordinate.
std::int64_t PaperConventionBits(const CompressorSpec& spec);

struct CompressedMessage {
  Vector payload;
  std::int64_t bits = 0;
  std::int64_t bits_paper_convention = 0;
  std::int64_t rng_draws = 0;
};

CompressedMessage Compress(const CompressorSpec& spec,
                           std::span<const double> v, Rng& rng);

struct BatteryResult {
  std::string name;
  double mean_ratio = 0.0;  // mean of ||Q(x) - x||^2 / ||x||^2
  double std_error = 0.0;
};

struct ContractionReport {
  std::vector<BatteryResult> batteries;
  double worst_mean = 0.0;
  double worst_std_error = 0.0;
  double omega_sq = 0.0;
  // Every battery satisfies mean <= omega^2 + 3 SE.
  bool within_bound = true;
};

// Mean relative compression error on one family of inputs.
BatteryResult MeasureContraction(const CompressorSpec& spec,
                                 std::string_view battery, int samples,
                                 Rng& rng);

// Runs the gaussian, sparse, constant and spike batteries. samples >= 1000.
ContractionReport EmpiricalContraction(const CompressorSpec& spec, int samples,
                                       Rng& rng);

}  // namespace pushsim

#endif  // PUSHSIM_COMPRESSION_H_
