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

#include "pushsim/compression.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "pushsim/error.h"

namespace pushsim {
namespace {

std::string FormatFraction(double a) {
  std::ostringstream os;
  os << a;
  return os.str();
}

// Draws one input vector from the named battery.
Vector BatteryVector(std::string_view battery, std::size_t d, Rng& rng) {
  Vector v(d, 0.0);
  std::normal_distribution<double> normal;
  if (battery == "gaussian") {
    for (double& e : v) e = normal(rng);
  } else if (battery == "sparse") {
    const std::size_t nonzero = std::max<std::size_t>(1, d / 10);
    std::uniform_int_distribution<std::size_t> pick(0, d - 1);
    for (std::size_t k = 0; k < nonzero; ++k) v[pick(rng)] = normal(rng);
    if (SquaredNorm(v) == 0.0) v[0] = 1.0;
  } else if (battery == "constant") {
    std::fill(v.begin(), v.end(), 1.0);
  } else if (battery == "spike") {
    v[0] = 5.0;
  } else {
    throw ValidationError("unknown contraction battery '" +
                          std::string(battery) + "'");
  }
  return v;
}

}  // namespace

CompressorSpec CompressorSpec::Identity(std::size_t d, int float_width) {
  return {CompressorKind::kIdentity, 1.0, 8, d, float_width};
}

CompressorSpec CompressorSpec::Rand(double a, std::size_t d, int float_width) {
  return {CompressorKind::kRand, a, 8, d, float_width};
}

CompressorSpec CompressorSpec::Gsgd(int b, std::size_t d, int float_width) {
  return {CompressorKind::kGsgd, 1.0, b, d, float_width};
}

std::string CompressorSpec::Label() const {
  switch (kind) {
    case CompressorKind::kIdentity:
      return "identity";
    case CompressorKind::kRand:
      return "rand_" + FormatFraction(a);
    case CompressorKind::kGsgd:
      return "gsgd_" + std::to_string(b);
  }
  return "unknown";
}

CompressorKind ParseCompressorKind(std::string_view name) {
  if (name == "identity") return CompressorKind::kIdentity;
  if (name == "rand" || name == "rand_a") return CompressorKind::kRand;
  if (name == "gsgd" || name == "gsgd_b") return CompressorKind::kGsgd;
  throw ValidationError("unknown compression kind '" + std::string(name) + "'");
}

CompressorSpec ParseCompressor(std::string_view label, std::size_t d,
                               int float_width) {
  if (label == "identity") return CompressorSpec::Identity(d, float_width);
  const auto underscore = label.find('_');
  if (underscore == std::string_view::npos) {
    throw ValidationError("cannot parse compressor '" + std::string(label) +
                          "'");
  }
  const std::string head(label.substr(0, underscore));
  const std::string tail(label.substr(underscore + 1));
  try {
    std::size_t used = 0;
    if (head == "rand") {
      const double a = std::stod(tail, &used);
      if (used == tail.size()) return CompressorSpec::Rand(a, d, float_width);
    } else if (head == "gsgd") {
      const int b = std::stoi(tail, &used);
      if (used == tail.size()) return CompressorSpec::Gsgd(b, d, float_width);
    }
  } catch (const std::logic_error&) {
  }
  throw ValidationError("cannot parse compressor '" + std::string(label) + "'");
}

std::size_t KeptCount(const CompressorSpec& spec) {
  if (spec.kind != CompressorKind::kRand) return spec.d;
  // Guard against a * d landing just below an integer.
  return static_cast<std::size_t>(
      std::floor(spec.a * static_cast<double>(spec.d) * (1.0 + 1e-12)));
}

void ValidateCompressor(const CompressorSpec& spec) {
  if (spec.d == 0) throw ValidationError("compressor dimension must be >= 1");
  if (spec.float_width < 1) throw ValidationError("float_width must be >= 1");
  switch (spec.kind) {
    case CompressorKind::kIdentity:
      break;
    case CompressorKind::kRand:
      if (!(spec.a > 0.0 && spec.a <= 1.0)) {
        throw ValidationError("rand fraction a must lie in (0, 1]");
      }
      if (KeptCount(spec) == 0) {
        throw ValidationError(spec.Label() + " keeps no coordinates at d = " +
                              std::to_string(spec.d));
      }
      break;
    case CompressorKind::kGsgd:
      if (spec.b < 2) throw ValidationError("gsgd needs b >= 2");
      if (spec.b > 53) throw ValidationError("gsgd b above 53 is not supported");
      break;
  }
  if (spec.kind == CompressorKind::kGsgd) {
    const double levels = std::ldexp(1.0, spec.b - 1);
    const double d = static_cast<double>(spec.d);
    const double w = std::min(d / (levels * levels), std::sqrt(d) / levels);
    if (w >= 1.0) {
      throw ValidationError(spec.Label() + " at d = " + std::to_string(spec.d) +
                            " has omega^2 = " + std::to_string(w) + " >= 1");
    }
  }
}

double OmegaSq(const CompressorSpec& spec) {
  ValidateCompressor(spec);
  const double d = static_cast<double>(spec.d);
  switch (spec.kind) {
    case CompressorKind::kIdentity:
      return 0.0;
    case CompressorKind::kRand:
      return 1.0 - static_cast<double>(KeptCount(spec)) / d;
    case CompressorKind::kGsgd: {
      const double levels = std::ldexp(1.0, spec.b - 1);
      return std::min(d / (levels * levels), std::sqrt(d) / levels);
    }
  }
  return 0.0;
}

std::int64_t MessageBits(const CompressorSpec& spec) {
  const auto d = static_cast<std::int64_t>(spec.d);
  switch (spec.kind) {
    case CompressorKind::kIdentity:
      return spec.float_width * d;
    case CompressorKind::kRand:
      return spec.float_width * static_cast<std::int64_t>(KeptCount(spec));
    case CompressorKind::kGsgd:
      return d * spec.b + spec.float_width;
  }
  return 0;
}

std::int64_t PaperConventionBits(const CompressorSpec& spec) {
  if (spec.kind == CompressorKind::kGsgd) {
    return static_cast<std::int64_t>(spec.d) * spec.b;
  }
  return MessageBits(spec);
}

CompressedMessage Compress(const CompressorSpec& spec,
                           std::span<const double> v, Rng& rng) {
  if (v.size() != spec.d) {
    throw ValidationError("compress: vector has length " +
                          std::to_string(v.size()) + ", spec expects " +
                          std::to_string(spec.d));
  }
  CompressedMessage msg;
  msg.bits = MessageBits(spec);
  msg.bits_paper_convention = PaperConventionBits(spec);

  switch (spec.kind) {
    case CompressorKind::kIdentity:
      msg.payload.assign(v.begin(), v.end());
      break;

    case CompressorKind::kRand: {
      const std::size_t keep = KeptCount(spec);
      msg.payload.assign(spec.d, 0.0);
      std::vector<std::size_t> order(spec.d);
      std::iota(order.begin(), order.end(), std::size_t{0});
      // Partial Fisher-Yates: the first `keep` slots are a uniform subset.
      for (std::size_t m = 0; m < keep; ++m) {
        std::uniform_int_distribution<std::size_t> pick(m, spec.d - 1);
        std::swap(order[m], order[pick(rng)]);
        ++msg.rng_draws;
      }
      for (std::size_t m = 0; m < keep; ++m) {
        msg.payload[order[m]] = v[order[m]];
      }
      break;
    }

    case CompressorKind::kGsgd: {
      msg.payload.assign(spec.d, 0.0);
      const double norm = Norm(v);
      if (norm == 0.0) break;  // Q(0) = 0
      const double levels = std::ldexp(1.0, spec.b - 1);
      std::uniform_real_distribution<double> dither(0.0, 1.0);
      for (std::size_t k = 0; k < spec.d; ++k) {
        const double u = dither(rng);
        ++msg.rng_draws;
        const double level = std::floor(levels * std::abs(v[k]) / norm + u);
        const double sign = v[k] >= 0.0 ? 1.0 : -1.0;
        msg.payload[k] = norm * sign * level / levels;
      }
      break;
    }
  }
  return msg;
}

BatteryResult MeasureContraction(const CompressorSpec& spec,
                                 std::string_view battery, int samples,
                                 Rng& rng) {
  if (samples < 2) throw ValidationError("need at least two samples");
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int s = 0; s < samples; ++s) {
    const Vector x = BatteryVector(battery, spec.d, rng);
    const CompressedMessage msg = Compress(spec, x, rng);
    const double ratio = SquaredDistance(msg.payload, x) / SquaredNorm(x);
    sum += ratio;
    sum_sq += ratio * ratio;
  }
  const double mean = sum / samples;
  const double var =
      std::max(0.0, (sum_sq - samples * mean * mean) / (samples - 1));
  return {std::string(battery), mean, std::sqrt(var / samples)};
}

ContractionReport EmpiricalContraction(const CompressorSpec& spec, int samples,
                                       Rng& rng) {
  if (samples < 1000) {
    throw ValidationError("empirical contraction needs >= 1000 samples");
  }
  ContractionReport report;
  report.omega_sq = OmegaSq(spec);
  for (std::string_view battery : {"gaussian", "sparse", "constant", "spike"}) {
    BatteryResult r = MeasureContraction(spec, battery, samples, rng);
    // 1e-12 absorbs summation roundoff when every draw has the same ratio.
    if (r.mean_ratio > report.omega_sq + 3.0 * r.std_error + 1e-12) {
      report.within_bound = false;
    }
    if (report.batteries.empty() || r.mean_ratio > report.worst_mean) {
      report.worst_mean = r.mean_ratio;
      report.worst_std_error = r.std_error;
    }
    report.batteries.push_back(std::move(r));
  }
  return report;
}

}  // namespace pushsim
