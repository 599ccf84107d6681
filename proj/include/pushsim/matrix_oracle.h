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

#ifndef PUSHSIM_MATRIX_ORACLE_H_
#define PUSHSIM_MATRIX_ORACLE_H_

#include <vector>

#include <Eigen/Dense>

#include "pushsim/engine.h"

namespace pushsim {

using RowMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Stacked n x d iterates of the matrix recursion
//   Q = Q(X - Xhat), Xhat += Q, W = X + (A - I) Xhat, y = A y, z_i = w_i / y_i,
//   X = W - eta (dF(Z) + N)
// X[0] is X^1; X[t], y[t] and Z[t - 1] come out of iteration t.
struct OracleTrajectory {
  std::vector<RowMatrix> X;
  std::vector<Eigen::VectorXd> y;
  std::vector<RowMatrix> Z;
};

// Test oracle for Simulation: works on dense matrices without neighbor lists
// or replicas, but draws from the same per-node streams and uses the same
// summation order, so its iterates match the node-local engine exactly.
// Does not check compression admissibility.
OracleTrajectory MatrixOracle(const EngineConfig& config);

}  // namespace pushsim

#endif  // PUSHSIM_MATRIX_ORACLE_H_
