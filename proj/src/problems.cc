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

#include "pushsim/problems.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "pushsim/error.h"

namespace pushsim {
namespace {

double Dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

// ln(1 + e^m) without overflow.
double Softplus(double m) {
  return m > 0.0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
}

double Sigmoid(double m) {
  if (m >= 0.0) return 1.0 / (1.0 + std::exp(-m));
  const double e = std::exp(m);
  return e / (1.0 + e);
}

std::vector<Sample> GaussianBlobs(std::size_t count, std::span<const double> mu,
                                  Rng& rng) {
  std::normal_distribution<double> normal;
  std::bernoulli_distribution coin(0.5);
  std::vector<Sample> out(count);
  for (Sample& s : out) {
    s.label = coin(rng) ? 1.0 : -1.0;
    s.features.resize(mu.size());
    for (std::size_t k = 0; k < mu.size(); ++k) {
      s.features[k] = s.label * mu[k] + normal(rng);
    }
  }
  return out;
}

}  // namespace

ObjectiveKind ParseObjectiveKind(std::string_view name) {
  if (name == "quadratic") return ObjectiveKind::kQuadratic;
  if (name == "logistic") return ObjectiveKind::kLogistic;
  if (name == "mlp2") return ObjectiveKind::kMlp2;
  throw ValidationError("unknown problem kind '" + std::string(name) + "'");
}

std::string_view ObjectiveKindName(ObjectiveKind kind) {
  switch (kind) {
    case ObjectiveKind::kQuadratic:
      return "quadratic";
    case ObjectiveKind::kLogistic:
      return "logistic";
    case ObjectiveKind::kMlp2:
      return "mlp2";
  }
  return "unknown";
}

Vector Objective::Gradient(std::span<const double> x, const Sample& s) const {
  Vector out(dimension());
  Gradient(x, s, out);
  return out;
}

std::optional<double> Objective::Accuracy(std::span<const double>,
                                          std::span<const Sample>) const {
  return std::nullopt;
}

void Objective::CheckShapes(std::span<const double> x, const Sample& s) const {
  if (x.size() != dimension()) {
    throw ValidationError("model has dimension " + std::to_string(x.size()) +
                          ", objective expects " +
                          std::to_string(dimension()));
  }
  if (s.features.size() != input_dimension()) {
    throw ValidationError("sample has " + std::to_string(s.features.size()) +
                          " features, objective expects " +
                          std::to_string(input_dimension()));
  }
}

// --- quadratic -------------------------------------------------------------

QuadraticObjective::QuadraticObjective(std::size_t d) : d_(d) {
  if (d == 0) throw ValidationError("dimension must be >= 1");
}

double QuadraticObjective::Loss(std::span<const double> x,
                                const Sample& s) const {
  CheckShapes(x, s);
  return 0.5 * SquaredDistance(x, s.features);
}

void QuadraticObjective::Gradient(std::span<const double> x, const Sample& s,
                                  std::span<double> out) const {
  CheckShapes(x, s);
  for (std::size_t k = 0; k < d_; ++k) out[k] = x[k] - s.features[k];
}

// --- logistic --------------------------------------------------------------

LogisticObjective::LogisticObjective(std::size_t d, double reg,
                                     double smoothness)
    : d_(d), reg_(reg), smoothness_(smoothness) {
  if (d == 0) throw ValidationError("dimension must be >= 1");
  if (reg < 0.0) throw ValidationError("regularization must be >= 0");
}

double LogisticObjective::SmoothnessBound(std::span<const Sample> samples,
                                          double reg) {
  double worst = 0.0;
  for (const Sample& s : samples) worst = std::max(worst, SquaredNorm(s.features));
  return 0.25 * worst + reg;
}

double LogisticObjective::Loss(std::span<const double> x,
                               const Sample& s) const {
  CheckShapes(x, s);
  const double margin = s.label * Dot(x, s.features);
  return Softplus(-margin) + 0.5 * reg_ * SquaredNorm(x);
}

void LogisticObjective::Gradient(std::span<const double> x, const Sample& s,
                                 std::span<double> out) const {
  CheckShapes(x, s);
  const double margin = s.label * Dot(x, s.features);
  const double coeff = -s.label * Sigmoid(-margin);
  for (std::size_t k = 0; k < d_; ++k) {
    out[k] = coeff * s.features[k] + reg_ * x[k];
  }
}

std::optional<double> LogisticObjective::Accuracy(
    std::span<const double> x, std::span<const Sample> data) const {
  if (data.empty()) return std::nullopt;
  std::size_t correct = 0;
  for (const Sample& s : data) {
    const double score = Dot(x, s.features);
    if ((score >= 0.0 ? 1.0 : -1.0) == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

// --- mlp2 ------------------------------------------------------------------

Mlp2Objective::Mlp2Objective(std::size_t inputs, std::size_t hidden,
                             double reg)
    : inputs_(inputs), hidden_(hidden), reg_(reg) {
  if (inputs == 0 || hidden == 0) {
    throw ValidationError("mlp2 needs at least one input and hidden unit");
  }
  if (reg < 0.0) throw ValidationError("regularization must be >= 0");
}

std::size_t Mlp2Objective::ParameterCount(std::size_t inputs,
                                          std::size_t hidden) {
  return hidden * inputs + 2 * hidden + 1;
}

double Mlp2Objective::Output(std::span<const double> x,
                             std::span<const double> a) const {
  const double* w1 = x.data();
  const double* b1 = w1 + hidden_ * inputs_;
  const double* w2 = b1 + hidden_;
  const double b2 = w2[hidden_];
  double out = b2;
  for (std::size_t h = 0; h < hidden_; ++h) {
    double pre = b1[h];
    for (std::size_t k = 0; k < inputs_; ++k) pre += w1[h * inputs_ + k] * a[k];
    out += w2[h] * std::tanh(pre);
  }
  return out;
}

double Mlp2Objective::Loss(std::span<const double> x, const Sample& s) const {
  CheckShapes(x, s);
  const double r = Output(x, s.features) - s.label;
  return 0.5 * r * r + 0.5 * reg_ * SquaredNorm(x);
}

void Mlp2Objective::Gradient(std::span<const double> x, const Sample& s,
                             std::span<double> out) const {
  CheckShapes(x, s);
  const double* w1 = x.data();
  const double* b1 = w1 + hidden_ * inputs_;
  const double* w2 = b1 + hidden_;
  const double b2 = w2[hidden_];

  Vector act(hidden_);
  double output = b2;
  for (std::size_t h = 0; h < hidden_; ++h) {
    double pre = b1[h];
    for (std::size_t k = 0; k < inputs_; ++k) {
      pre += w1[h * inputs_ + k] * s.features[k];
    }
    act[h] = std::tanh(pre);
    output += w2[h] * act[h];
  }
  const double r = output - s.label;

  double* g_w1 = out.data();
  double* g_b1 = g_w1 + hidden_ * inputs_;
  double* g_w2 = g_b1 + hidden_;
  for (std::size_t h = 0; h < hidden_; ++h) {
    const double back = r * w2[h] * (1.0 - act[h] * act[h]);
    for (std::size_t k = 0; k < inputs_; ++k) {
      g_w1[h * inputs_ + k] = back * s.features[k];
    }
    g_b1[h] = back;
    g_w2[h] = r * act[h];
  }
  g_w2[hidden_] = r;
  if (reg_ > 0.0) {
    for (std::size_t k = 0; k < x.size(); ++k) out[k] += reg_ * x[k];
  }
}

std::optional<double> Mlp2Objective::Accuracy(
    std::span<const double> x, std::span<const Sample> data) const {
  if (data.empty()) return std::nullopt;
  std::size_t correct = 0;
  for (const Sample& s : data) {
    const double score = Output(x, s.features);
    if ((score >= 0.0 ? 1.0 : -1.0) == (s.label >= 0.0 ? 1.0 : -1.0)) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

double EstimateSmoothness(const Objective& objective,
                          std::span<const Sample> samples, int probes,
                          Rng& rng) {
  if (samples.empty()) throw ValidationError("no samples to probe");
  const std::size_t d = objective.dimension();
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);
  double worst = 0.0;
  Vector x(d), y(d), gx(d), gy(d);
  for (int p = 0; p < probes; ++p) {
    for (std::size_t k = 0; k < d; ++k) {
      x[k] = normal(rng);
      y[k] = x[k] + 1e-3 * normal(rng);
    }
    const Sample& s = samples[pick(rng)];
    objective.Gradient(x, s, gx);
    objective.Gradient(y, s, gy);
    const double dist = std::sqrt(SquaredDistance(x, y));
    if (dist > 0.0) worst = std::max(worst, std::sqrt(SquaredDistance(gx, gy)) / dist);
  }
  return worst;
}

// --- datasets --------------------------------------------------------------

Partition PartitionDataset(std::vector<Sample> global, int n,
                           std::uint64_t seed) {
  if (n < 1) throw ValidationError("need at least one node");
  if (global.size() < static_cast<std::size_t>(n)) {
    throw ValidationError("dataset of size " + std::to_string(global.size()) +
                          " cannot cover " + std::to_string(n) + " nodes");
  }
  Rng rng = MakeSeededRng(seed, /*salt=*/0x9a27);
  std::shuffle(global.begin(), global.end(), rng);

  const std::size_t per_node = global.size() / static_cast<std::size_t>(n);
  Partition out;
  out.dropped = global.size() - per_node * static_cast<std::size_t>(n);
  out.locals.resize(n);
  for (int i = 0; i < n; ++i) {
    out.locals[i].node_id = i;
    auto first = global.begin() + static_cast<std::ptrdiff_t>(i * per_node);
    out.locals[i].samples.assign(std::make_move_iterator(first),
                                 std::make_move_iterator(first + per_node));
  }
  return out;
}

std::size_t SampleIndex(std::size_t J, Rng& rng) {
  if (J == 0) throw ValidationError("J must be >= 1");
  std::uniform_int_distribution<std::size_t> pick(0, J - 1);
  return pick(rng);
}

std::vector<Sample> LoadCsvSamples(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) {
    throw ValidationError(path.string() + " is empty");
  }
  std::vector<Sample> out;
  std::size_t width = 0;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> values;
    std::stringstream fields(line);
    std::string cell;
    while (std::getline(fields, cell, ',')) {
      try {
        values.push_back(std::stod(cell));
      } catch (const std::logic_error&) {
        throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                              ": not a number: '" + cell + "'");
      }
    }
    if (values.size() < 2) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": need at least one feature and a label");
    }
    if (width == 0) width = values.size();
    if (values.size() != width) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": inconsistent column count");
    }
    Sample s;
    s.label = values.back();
    values.pop_back();
    s.features = std::move(values);
    out.push_back(std::move(s));
  }
  if (out.empty()) throw ValidationError(path.string() + " has no data rows");
  return out;
}

// --- problems --------------------------------------------------------------

double Problem::FullLoss(std::span<const double> x) const {
  double total = 0.0;
  for (const LocalDataset& local : locals) {
    double node = 0.0;
    for (const Sample& s : local.samples) node += objective->Loss(x, s);
    total += node / static_cast<double>(local.J());
  }
  return total / static_cast<double>(locals.size());
}

Vector Problem::FullGradient(std::span<const double> x) const {
  const std::size_t d = dimension();
  Vector total(d, 0.0), node(d), g(d);
  for (const LocalDataset& local : locals) {
    std::fill(node.begin(), node.end(), 0.0);
    for (const Sample& s : local.samples) {
      objective->Gradient(x, s, g);
      for (std::size_t k = 0; k < d; ++k) node[k] += g[k];
    }
    const double inv_j = 1.0 / static_cast<double>(local.J());
    for (std::size_t k = 0; k < d; ++k) total[k] += node[k] * inv_j;
  }
  const double inv_n = 1.0 / static_cast<double>(locals.size());
  for (double& e : total) e *= inv_n;
  return total;
}

std::optional<double> Problem::TestAccuracy(std::span<const double> x) const {
  if (!test_set.empty()) return objective->Accuracy(x, test_set);
  std::vector<Sample> all;
  for (const LocalDataset& local : locals) {
    all.insert(all.end(), local.samples.begin(), local.samples.end());
  }
  return objective->Accuracy(x, all);
}

Problem MakeProblemFromLocals(std::shared_ptr<const Objective> objective,
                              std::vector<LocalDataset> locals,
                              std::vector<Sample> test_set) {
  if (!objective) throw ValidationError("problem needs an objective");
  if (locals.empty()) throw ValidationError("problem needs at least one node");
  const std::size_t J = locals.front().J();
  if (J == 0) throw ValidationError("local datasets must be non-empty");
  for (const LocalDataset& local : locals) {
    if (local.J() != J) {
      throw ValidationError("all nodes must hold the same number of samples");
    }
  }
  Problem p;
  p.objective = std::move(objective);
  p.locals = std::move(locals);
  p.test_set = std::move(test_set);
  return p;
}

Problem MakeProblem(const ProblemSpec& spec, int n) {
  if (n < 1) throw ValidationError("need at least one node");
  if (spec.J < 1) throw ValidationError("problem.J must be >= 1");
  if (spec.d < 1) throw ValidationError("problem.d must be >= 1");
  if (spec.reg < 0.0) throw ValidationError("problem.reg must be >= 0");

  std::vector<Sample> global;
  std::vector<Sample> test_set;
  std::size_t inputs = spec.d;
  const std::size_t total =
      static_cast<std::size_t>(spec.J) * static_cast<std::size_t>(n);

  if (spec.csv) {
    global = LoadCsvSamples(*spec.csv);
    inputs = global.front().features.size();
    if (spec.kind != ObjectiveKind::kQuadratic) {
      for (Sample& s : global) s.label = s.label > 0.0 ? 1.0 : -1.0;
    }
  } else if (spec.kind == ObjectiveKind::kQuadratic) {
    Rng rng = MakeSeededRng(spec.synth_seed, 1);
    std::normal_distribution<double> normal;
    Vector center(spec.d);
    for (double& c : center) c = normal(rng);
    global.resize(total);
    for (Sample& s : global) {
      s.features.resize(spec.d);
      for (std::size_t k = 0; k < spec.d; ++k) {
        s.features[k] = center[k] + normal(rng);
      }
    }
  } else {
    Rng rng = MakeSeededRng(spec.synth_seed, 2);
    std::normal_distribution<double> normal;
    Vector mu(spec.d);
    for (double& m : mu) m = normal(rng);
    const double scale = spec.separation / Norm(mu);
    for (double& m : mu) m *= scale;
    global = GaussianBlobs(total, mu, rng);
    Rng test_rng = MakeSeededRng(spec.synth_seed, 3);
    test_set = GaussianBlobs(spec.test_size, mu, test_rng);
  }

  Partition parts = PartitionDataset(std::move(global), n, spec.synth_seed);
  if (!spec.csv && parts.locals.front().J() != static_cast<std::size_t>(spec.J)) {
    throw ValidationError("internal: synthetic partition size mismatch");
  }

  std::shared_ptr<const Objective> objective;
  switch (spec.kind) {
    case ObjectiveKind::kQuadratic:
      objective = std::make_shared<QuadraticObjective>(inputs);
      break;
    case ObjectiveKind::kLogistic: {
      std::vector<Sample> all;
      for (const auto& l : parts.locals)
        all.insert(all.end(), l.samples.begin(), l.samples.end());
      objective = std::make_shared<LogisticObjective>(
          inputs, spec.reg, LogisticObjective::SmoothnessBound(all, spec.reg));
      break;
    }
    case ObjectiveKind::kMlp2: {
      auto mlp = std::make_shared<Mlp2Objective>(inputs, spec.hidden, spec.reg);
      Rng probe_rng = MakeSeededRng(spec.synth_seed, 4);
      mlp->set_smoothness(EstimateSmoothness(
          *mlp, parts.locals.front().samples, 200, probe_rng));
      objective = std::move(mlp);
      break;
    }
  }

  Problem p = MakeProblemFromLocals(std::move(objective),
                                    std::move(parts.locals), std::move(test_set));
  p.dropped = parts.dropped;
  return p;
}

}  // namespace pushsim
