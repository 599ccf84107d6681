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

#include "pushsim/topology.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "pushsim/error.h"
#include "pushsim/rng.h"

namespace pushsim {
namespace {

std::vector<bool> Reachable(const DirectedGraph& graph, int start,
                            bool forward) {
  std::vector<bool> seen(graph.size(), false);
  std::vector<int> stack{start};
  seen[start] = true;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    const auto& next = forward ? graph.out_neighbors(u) : graph.in_neighbors(u);
    for (int v : next) {
      if (!seen[v]) {
        seen[v] = true;
        stack.push_back(v);
      }
    }
  }
  return seen;
}

}  // namespace

GraphKind ParseGraphKind(std::string_view name) {
  if (name == "ring") return GraphKind::kRing;
  if (name == "complete") return GraphKind::kComplete;
  if (name == "exponential") return GraphKind::kExponential;
  if (name == "custom" || name == "custom-edge-list") return GraphKind::kCustom;
  throw ValidationError("unknown topology kind '" + std::string(name) + "'");
}

std::string_view GraphKindName(GraphKind kind) {
  switch (kind) {
    case GraphKind::kRing:
      return "ring";
    case GraphKind::kComplete:
      return "complete";
    case GraphKind::kExponential:
      return "exponential";
    case GraphKind::kCustom:
      return "custom";
  }
  return "unknown";
}

DirectedGraph DirectedGraph::FromEdges(int n,
                                       std::vector<std::pair<int, int>> edges) {
  if (n < 1) throw ValidationError("graph needs at least one node");
  DirectedGraph g;
  g.n_ = n;
  for (const auto& [from, to] : edges) {
    if (from < 0 || from >= n || to < 0 || to >= n) {
      throw ValidationError("edge (" + std::to_string(from) + ", " +
                            std::to_string(to) + ") out of range for n = " +
                            std::to_string(n));
    }
  }
  std::erase_if(edges, [](const auto& e) { return e.first == e.second; });
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  g.edges_ = std::move(edges);

  g.out_.assign(n, {});
  g.in_.assign(n, {});
  for (int i = 0; i < n; ++i) {
    g.out_[i].push_back(i);
    g.in_[i].push_back(i);
  }
  for (const auto& [from, to] : g.edges_) {
    g.out_[from].push_back(to);
    g.in_[to].push_back(from);
  }
  for (int i = 0; i < n; ++i) {
    std::sort(g.out_[i].begin(), g.out_[i].end());
    std::sort(g.in_[i].begin(), g.in_[i].end());
  }
  return g;
}

bool DirectedGraph::HasEdge(int from, int to) const {
  if (from == to) return true;
  return std::binary_search(edges_.begin(), edges_.end(),
                            std::make_pair(from, to));
}

DirectedGraph BuildGraph(GraphKind kind, int n) {
  if (n < 1) throw ValidationError("graph needs at least one node");
  std::vector<std::pair<int, int>> edges;
  switch (kind) {
    case GraphKind::kRing:
      for (int i = 0; i < n; ++i) edges.emplace_back(i, (i + 1) % n);
      break;
    case GraphKind::kComplete:
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) edges.emplace_back(i, j);
      break;
    case GraphKind::kExponential:
      for (int i = 0; i < n; ++i)
        for (long long hop = 1; hop < n; hop *= 2)
          edges.emplace_back(i, static_cast<int>((i + hop) % n));
      break;
    case GraphKind::kCustom:
      throw ValidationError("custom graphs need an edge list");
  }
  return DirectedGraph::FromEdges(n, std::move(edges));
}

DirectedGraph BuildCustomGraph(int n, std::vector<std::pair<int, int>> edges) {
  DirectedGraph g = DirectedGraph::FromEdges(n, std::move(edges));
  if (!IsStronglyConnected(g)) {
    throw ValidationError("custom graph is not strongly connected");
  }
  return g;
}

DirectedGraph LoadEdgeList(const std::filesystem::path& path, int n) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open edge list " + path.string());
  std::vector<std::pair<int, int>> edges;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    int from = 0;
    int to = 0;
    std::string extra;
    if (!(fields >> from >> to) || (fields >> extra)) {
      throw ValidationError(path.string() + ":" + std::to_string(line_no) +
                            ": expected 'j i'");
    }
    edges.emplace_back(from, to);
  }
  return BuildCustomGraph(n, std::move(edges));
}

bool IsStronglyConnected(const DirectedGraph& graph) {
  const auto fwd = Reachable(graph, 0, /*forward=*/true);
  const auto bwd = Reachable(graph, 0, /*forward=*/false);
  return std::all_of(fwd.begin(), fwd.end(), [](bool b) { return b; }) &&
         std::all_of(bwd.begin(), bwd.end(), [](bool b) { return b; });
}

MixingMatrix::MixingMatrix(DirectedGraph graph)
    : graph_(std::move(graph)),
      weights_(Eigen::MatrixXd::Zero(graph_.size(), graph_.size())) {
  for (int j = 0; j < graph_.size(); ++j) {
    const double w = 1.0 / graph_.out_degree(j);
    for (int i : graph_.out_neighbors(j)) weights_(i, j) = w;
  }
}

double MixingMatrix::MaxColumnSumError() const {
  double worst = 0.0;
  for (int j = 0; j < size(); ++j) {
    worst = std::max(worst, std::abs(weights_.col(j).sum() - 1.0));
  }
  return worst;
}

MixingMatrix BuildMixing(const DirectedGraph& graph) {
  if (!IsStronglyConnected(graph)) {
    throw ValidationError("mixing matrix requires a strongly connected graph");
  }
  return MixingMatrix(graph);
}

double SpectralNorm(const Eigen::MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  const Eigen::MatrixXd gram = m.transpose() * m;
  if (gram.norm() == 0.0) return 0.0;

  // Fixed pseudo-random start so the iterate is not orthogonal to the top
  // singular vector for structured (e.g. circulant) inputs.
  Rng rng = MakeSeededRng(0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(m.cols());
  for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = normal(rng);
  v.normalize();

  double estimate = 0.0;
  for (int iter = 0; iter < 20000; ++iter) {
    Eigen::VectorXd next = gram * v;
    const double norm = next.norm();
    if (norm == 0.0) return 0.0;
    next /= norm;
    const double updated = next.dot(gram * next);
    v = std::move(next);
    if (std::abs(updated - estimate) <= 1e-15 * updated) {
      estimate = updated;
      break;
    }
    estimate = updated;
  }
  return std::sqrt(std::max(estimate, 0.0));
}

SpectralConstants EstimateConstants(const MixingMatrix& mixing, int horizon) {
  if (horizon < 2) throw ValidationError("estimation horizon must be >= 2");
  const Eigen::MatrixXd& a = mixing.weights();
  const int n = mixing.size();

  SpectralConstants out;
  out.horizon = horizon;

  // Perron vector: power iteration from the uniform vector.
  Eigen::VectorXd phi = Eigen::VectorXd::Constant(n, 1.0 / n);
  for (int iter = 0; iter < 1000000; ++iter) {
    Eigen::VectorXd next = a * phi;
    next /= next.sum();
    const double change = (next - phi).lpNorm<1>();
    phi = std::move(next);
    if (change < 1e-16) break;
  }
  if ((a * phi - phi).norm() > 1e-10) {
    throw ConvergenceError("Perron vector power iteration did not converge");
  }
  out.phi = phi;

  const Eigen::MatrixXd limit = phi * Eigen::RowVectorXd::Ones(n);
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd weight = Eigen::VectorXd::Ones(n);
  out.residuals.reserve(horizon + 1);
  out.beta = std::numeric_limits<double>::infinity();
  for (int k = 0; k <= horizon; ++k) {
    if (k > 0) {
      power = a * power;
      weight = a * weight;
      out.beta = std::min(out.beta, weight.minCoeff());
    }
    out.residuals.push_back(SpectralNorm(power - limit));
  }

  const auto& r = out.residuals;
  if (r[1] > kResidualFloor && r[horizon] > 1e-6 * r[1]) {
    throw ConvergenceError(
        "mixing residual did not decay below 1e-6 of its k = 1 value within "
        "the horizon of " + std::to_string(horizon));
  }

  // Contiguous run of resolvable residuals starting at k = 1.
  int last = 0;
  while (last + 1 <= horizon && r[last + 1] > kResidualFloor) ++last;

  if (last == 0) {
    out.lambda = 0.0;
  } else if (last == 1) {
    out.lambda = r[0] > 0.0 ? r[1] / r[0] : 0.0;
  } else {
    // Least squares fit of log r_k = c + k log(lambda) over k = 1..last.
    double sk = 0.0, sy = 0.0, skk = 0.0, sky = 0.0;
    const double m = last;
    for (int k = 1; k <= last; ++k) {
      const double y = std::log(r[k]);
      sk += k;
      sy += y;
      skk += static_cast<double>(k) * k;
      sky += k * y;
    }
    const double slope = (m * sky - sk * sy) / (m * skk - sk * sk);
    out.lambda = std::exp(slope);
  }

  out.C = r[0];
  if (out.lambda > 0.0) {
    for (int k = 1; k <= last; ++k) {
      out.C = std::max(out.C, r[k] / std::pow(out.lambda, k));
    }
  }

  out.gamma = SpectralNorm(a - Eigen::MatrixXd::Identity(n, n));
  return out;
}

}  // namespace pushsim
