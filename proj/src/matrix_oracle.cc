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

#include "pushsim/matrix_oracle.h"

#include "pushsim/compression.h"
#include "pushsim/privacy.h"
#include "pushsim/rng.h"

namespace pushsim {
namespace {

std::span<const double> Row(const RowMatrix& m, Eigen::Index i) {
  return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

std::span<double> Row(RowMatrix& m, Eigen::Index i) {
  return {m.data() + i * m.cols(), static_cast<std::size_t>(m.cols())};
}

// out(i, k) = sum_j a(i, j) m(j, k), j ascending from a zero accumulator.
RowMatrix DenseProduct(const Eigen::MatrixXd& a, const RowMatrix& m) {
  RowMatrix out(a.rows(), m.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index k = 0; k < m.cols(); ++k) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < a.cols(); ++j) s += a(i, j) * m(j, k);
      out(i, k) = s;
    }
  }
  return out;
}

}  // namespace

OracleTrajectory MatrixOracle(const EngineConfig& raw) {
  const EngineConfig config = ResolveConfig(raw);
  const Eigen::MatrixXd& a = config.mixing->weights();
  const Problem& problem = *config.problem;
  const CompressorSpec& spec = config.compressor;
  const Eigen::Index n = a.rows();
  const Eigen::Index d = static_cast<Eigen::Index>(spec.d);
  const double sigma_sq = EffectiveSigmaSq(config.privacy);

  RowMatrix x = RowMatrix::Zero(n, d);
  if (config.initial_x) {
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < d; ++k) x(i, k) = (*config.initial_x)[i][k];
    }
  }
  RowMatrix xhat = RowMatrix::Zero(n, d);
  Eigen::VectorXd y = Eigen::VectorXd::Ones(n);

  OracleTrajectory out;
  out.X.push_back(x);
  out.y.push_back(y);

  for (std::int64_t t = 1; t <= config.T; ++t) {
    const auto step = static_cast<std::uint64_t>(t);

    RowMatrix q(n, d);
    {
      const RowMatrix gap = x - xhat;
      for (Eigen::Index i = 0; i < n; ++i) {
        Rng rng = MakeStream(config.seed, i, StreamPurpose::kCompression, step);
        const Vector payload = Compress(spec, Row(gap, i), rng).payload;
        for (Eigen::Index k = 0; k < d; ++k) q(i, k) = payload[k];
      }
    }
    xhat = xhat + q;

    const RowMatrix w = (x - xhat) + DenseProduct(a, xhat);

    Eigen::VectorXd y_next(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double s = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) s += a(i, j) * y(j);
      y_next(i) = s;
    }
    y = y_next;

    RowMatrix z(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < d; ++k) z(i, k) = w(i, k) / y(i);
    }

    RowMatrix grad(n, d);
    RowMatrix noise(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
      const LocalDataset& local = problem.locals[i];
      Rng sample_rng = MakeStream(config.seed, i, StreamPurpose::kSampling, step);
      const Sample& sample = local.samples[SampleIndex(local.J(), sample_rng)];
      problem.objective->Gradient(Row(z, i), sample, Row(grad, i));
      if (config.clip) ClipGradientInPlace(Row(grad, i), config.privacy.clip_G);
      Rng noise_rng = MakeStream(config.seed, i, StreamPurpose::kNoise, step);
      const Vector draw = DrawNoise(sigma_sq, static_cast<std::size_t>(d), noise_rng);
      for (Eigen::Index k = 0; k < d; ++k) noise(i, k) = draw[k];
    }

    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index k = 0; k < d; ++k) {
        x(i, k) = w(i, k) - config.eta * (grad(i, k) + noise(i, k));
      }
    }

    out.X.push_back(x);
    out.y.push_back(y);
    out.Z.push_back(z);
  }
  return out;
}

}  // namespace pushsim
