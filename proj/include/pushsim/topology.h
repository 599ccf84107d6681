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

#ifndef PUSHSIM_TOPOLOGY_H_
#define PUSHSIM_TOPOLOGY_H_

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace pushsim {

enum class GraphKind { kRing, kComplete, kExponential, kCustom };

GraphKind ParseGraphKind(std::string_view name);
std::string_view GraphKindName(GraphKind kind);

// Directed communication graph over nodes 0..n-1. Every node is its own in-
// and out-neighbor; the self-loop is implicit and never appears in `edges()`.
class DirectedGraph {
 public:
  // Edges are (from, to) pairs. Duplicates and explicit self-loops are
  // dropped. Throws ValidationError on out-of-range endpoints.
  static DirectedGraph FromEdges(int n, std::vector<std::pair<int, int>> edges);

  int size() const { return n_; }

  // Sorted, self included.
  const std::vector<int>& out_neighbors(int node) const { return out_[node]; }
  const std::vector<int>& in_neighbors(int node) const { return in_[node]; }

  // Number of out-neighbors counting self.
  int out_degree(int node) const {
    return static_cast<int>(out_[node].size());
  }

  // Distinct (from, to) pairs with from != to, sorted.
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  bool HasEdge(int from, int to) const;

 private:
  DirectedGraph() = default;

  int n_ = 0;
  std::vector<std::pair<int, int>> edges_;
  std::vector<std::vector<int>> out_;
  std::vector<std::vector<int>> in_;
};

// Builds one of the structured topologies. Exponential: node i sends to
// (i + 2^m) mod n for every m with 2^m < n.
DirectedGraph BuildGraph(GraphKind kind, int n);

// Custom graph from an explicit edge list; rejects graphs that are not
// strongly connected.
DirectedGraph BuildCustomGraph(int n, std::vector<std::pair<int, int>> edges);

// Reads a whitespace separated `j i` pair per line (edge j -> i, 0-indexed).
// Blank lines and lines starting with '#' are ignored.
DirectedGraph LoadEdgeList(const std::filesystem::path& path, int n);

bool IsStronglyConnected(const DirectedGraph& graph);

// Column-stochastic weights: column j puts 1/|N_j^out| on every out-neighbor
// of j, itself included.
class MixingMatrix {
 public:
  explicit MixingMatrix(DirectedGraph graph);

  const Eigen::MatrixXd& weights() const { return weights_; }
  const DirectedGraph& graph() const { return graph_; }
  int size() const { return graph_.size(); }
  double operator()(int row, int col) const { return weights_(row, col); }

  // max_j |sum_i A(i, j) - 1|
  double MaxColumnSumError() const;

 private:
  DirectedGraph graph_;
  Eigen::MatrixXd weights_;
};

MixingMatrix BuildMixing(const DirectedGraph& graph);

// Numerical estimates of the constants in the geometric mixing bound
// ||A^k - phi 1^T||_2 <= C lambda^k and the push-sum weight floor
// [A^k 1]_i >= beta.
struct SpectralConstants {
  Eigen::VectorXd phi;
  double lambda = 0.0;
  double C = 0.0;
  double beta = 0.0;
  double gamma = 0.0;  // ||A - I||_2
  int horizon = 0;
  // residuals[k] = ||A^k - phi 1^T||_2 for k = 0..horizon.
  std::vector<double> residuals;
};

inline constexpr int kDefaultHorizon = 200;

// Residuals at or below this level are roundoff and are excluded from the
// rate fit and from the C computation.
inline constexpr double kResidualFloor = 1e-11;

// Throws ValidationError for horizon < 2 and ConvergenceError if the residual
// at the horizon has not fallen below 1e-6 of its k = 1 value.
SpectralConstants EstimateConstants(const MixingMatrix& mixing,
                                    int horizon = kDefaultHorizon);

// Largest singular value by power iteration on M^T M.
double SpectralNorm(const Eigen::MatrixXd& m);

}  // namespace pushsim

#endif  // PUSHSIM_TOPOLOGY_H_
