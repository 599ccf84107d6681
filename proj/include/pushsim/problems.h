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

#ifndef PUSHSIM_PROBLEMS_H_
#define PUSHSIM_PROBLEMS_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pushsim/rng.h"
#include "pushsim/vec.h"

namespace pushsim {

enum class ObjectiveKind { kQuadratic, kLogistic, kMlp2 };

ObjectiveKind ParseObjectiveKind(std::string_view name);
std::string_view ObjectiveKindName(ObjectiveKind kind);

// One data point. Quadratic uses `features` as the target vector b; the
// classifiers use labels in {-1, +1}.
struct Sample {
  Vector features;
  double label = 0.0;
};

// Per-sample loss f(x; sample) with its analytic gradient. Implementations
// are immutable and reentrant.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual ObjectiveKind kind() const = 0;
  // Length of the model vector x.
  virtual std::size_t dimension() const = 0;
  // Length of Sample::features.
  virtual std::size_t input_dimension() const = 0;
  // Smoothness constant L (exact or estimated, see each objective).
  virtual double smoothness() const = 0;

  virtual double Loss(std::span<const double> x, const Sample& s) const = 0;
  virtual void Gradient(std::span<const double> x, const Sample& s,
                        std::span<double> out) const = 0;

  Vector Gradient(std::span<const double> x, const Sample& s) const;

  // Fraction of correctly classified samples; nullopt for regression.
  virtual std::optional<double> Accuracy(std::span<const double> x,
                                         std::span<const Sample> data) const;

 protected:
  // Throws ValidationError on a dimension mismatch.
  void CheckShapes(std::span<const double> x, const Sample& s) const;
};

// 1/2 ||x - b||^2, L = 1.
class QuadraticObjective final : public Objective {
 public:
  explicit QuadraticObjective(std::size_t d);

  ObjectiveKind kind() const override { return ObjectiveKind::kQuadratic; }
  std::size_t dimension() const override { return d_; }
  std::size_t input_dimension() const override { return d_; }
  double smoothness() const override { return 1.0; }
  double Loss(std::span<const double> x, const Sample& s) const override;
  void Gradient(std::span<const double> x, const Sample& s,
                std::span<double> out) const override;
  using Objective::Gradient;

 private:
  std::size_t d_;
};

// ln(1 + exp(-y <x, a>)) + reg/2 ||x||^2.
class LogisticObjective final : public Objective {
 public:
  LogisticObjective(std::size_t d, double reg, double smoothness);

  // 1/4 max ||a||^2 + reg over the given samples.
  static double SmoothnessBound(std::span<const Sample> samples, double reg);

  ObjectiveKind kind() const override { return ObjectiveKind::kLogistic; }
  std::size_t dimension() const override { return d_; }
  std::size_t input_dimension() const override { return d_; }
  double smoothness() const override { return smoothness_; }
  double Loss(std::span<const double> x, const Sample& s) const override;
  void Gradient(std::span<const double> x, const Sample& s,
                std::span<double> out) const override;
  using Objective::Gradient;
  std::optional<double> Accuracy(std::span<const double> x,
                                 std::span<const Sample> data) const override;

 private:
  std::size_t d_;
  double reg_;
  double smoothness_;
};

// Two-layer tanh network with one linear output, trained on squared error:
//   out = w2 . tanh(W1 a + b1) + b2,  loss = 1/2 (out - y)^2 + reg/2 ||x||^2.
// x packs [W1 (hidden x inputs, row-major), b1, w2, b2].
class Mlp2Objective final : public Objective {
 public:
  Mlp2Objective(std::size_t inputs, std::size_t hidden, double reg);

  static std::size_t ParameterCount(std::size_t inputs, std::size_t hidden);

  ObjectiveKind kind() const override { return ObjectiveKind::kMlp2; }
  std::size_t dimension() const override {
    return ParameterCount(inputs_, hidden_);
  }
  std::size_t input_dimension() const override { return inputs_; }
  double smoothness() const override { return smoothness_; }
  void set_smoothness(double value) { smoothness_ = value; }
  std::size_t hidden() const { return hidden_; }

  double Output(std::span<const double> x, std::span<const double> a) const;
  double Loss(std::span<const double> x, const Sample& s) const override;
  void Gradient(std::span<const double> x, const Sample& s,
                std::span<double> out) const override;
  using Objective::Gradient;
  std::optional<double> Accuracy(std::span<const double> x,
                                 std::span<const Sample> data) const override;

 private:
  std::size_t inputs_;
  std::size_t hidden_;
  double reg_;
  double smoothness_ = 1.0;
};

// Largest observed ||grad(x) - grad(x')|| / ||x - x'|| over random nearby
// pairs. Used for objectives without a closed-form L.
double EstimateSmoothness(const Objective& objective,
                          std::span<const Sample> samples, int probes,
                          Rng& rng);

struct LocalDataset {
  int node_id = 0;
  std::vector<Sample> samples;
  std::size_t J() const { return samples.size(); }
};

struct Partition {
  std::vector<LocalDataset> locals;
  std::size_t dropped = 0;
};

// One seeded shuffle, then contiguous blocks of floor(size / n) per node.
// Leftover samples are dropped and counted.
Partition PartitionDataset(std::vector<Sample> global, int n,
                           std::uint64_t seed);

// Uniform index in [0, J).
std::size_t SampleIndex(std::size_t J, Rng& rng);

// Header row, comma separated, label in the last column.
std::vector<Sample> LoadCsvSamples(const std::filesystem::path& path);

struct ProblemSpec {
  ObjectiveKind kind = ObjectiveKind::kQuadratic;
  std::size_t d = 10;  // model dimension (quadratic, logistic) or inputs (mlp2)
  std::int64_t J = 100;
  double reg = 0.0;
  std::uint64_t synth_seed = 1;
  std::size_t hidden = 8;       // mlp2 only
  std::size_t test_size = 1000; // classifiers only
  double separation = 1.5;      // distance of class means from the origin
  std::optional<std::filesystem::path> csv;  // replaces synthetic data
};

// A finite-sum problem split across n nodes plus a held-out test set.
struct Problem {
  std::shared_ptr<const Objective> objective;
  std::vector<LocalDataset> locals;
  std::vector<Sample> test_set;
  std::size_t dropped = 0;

  int nodes() const { return static_cast<int>(locals.size()); }
  std::size_t dimension() const { return objective->dimension(); }
  std::size_t samples_per_node() const {
    return locals.empty() ? 0 : locals.front().J();
  }

  // f(x) = 1/n sum_i 1/J sum_j f_i(x; j)
  double FullLoss(std::span<const double> x) const;
  Vector FullGradient(std::span<const double> x) const;
  std::optional<double> TestAccuracy(std::span<const double> x) const;
};

Problem MakeProblem(const ProblemSpec& spec, int n);

// Assembles a problem from explicit local datasets (all of equal size).
Problem MakeProblemFromLocals(std::shared_ptr<const Objective> objective,
                              std::vector<LocalDataset> locals,
                              std::vector<Sample> test_set = {});

}  // namespace pushsim

#endif  // PUSHSIM_PROBLEMS_H_
