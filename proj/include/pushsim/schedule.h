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

#ifndef PUSHSIM_SCHEDULE_H_
#define PUSHSIM_SCHEDULE_H_

#include <cstdint>

namespace pushsim {

struct ScheduleInputs {
  double epsilon = 1.0;
  double delta = 1e-4;
  std::int64_t J = 1;
  int n = 1;
  std::size_t d = 1;
  double c2 = 1.0;
  double L = 1.0;
  double G = 1.0;   // clipping bound, enters sigma^2 only
  double c1 = 1.0;  // enters the epsilon condition only
};

// Step size, horizon and noise level under which the utility bound holds:
//   T     = max(1, floor(J^2 eps^2 / (c2^2 d ln(1/delta))))
//   eta   = 1 / (J eps / (c2 sqrt(n d ln(1/delta))) + L)
//   sigma^2 at that T.
struct Schedule {
  std::int64_t T = 1;
  double eta = 0.0;
  double sigma_sq = 0.0;
  // J >= c2 sqrt(d ln(1/delta)) n^{5/2} / eps
  bool j_condition = false;
  double j_required = 0.0;
  // eps < c1 T / J^2
  bool epsilon_condition = false;
  double epsilon_bound = 0.0;
};

// Throws ValidationError for non-positive inputs or delta outside (0, 1).
Schedule TheoreticalSchedule(const ScheduleInputs& in);

}  // namespace pushsim

#endif  // PUSHSIM_SCHEDULE_H_
