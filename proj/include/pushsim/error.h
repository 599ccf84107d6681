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

#ifndef PUSHSIM_ERROR_H_
#define PUSHSIM_ERROR_H_

#include <stdexcept>
#include <string>

namespace pushsim {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: malformed config, violated precondition, dimension mismatch.
// The CLI maps this to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Failures while a simulation is running. The CLI maps these to exit code 2.
class RuntimeFailure : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

class ReplicaConsistencyError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

class ConvergenceError : public RuntimeFailure {
 public:
  using RuntimeFailure::RuntimeFailure;
};

}  // namespace pushsim

#endif  // PUSHSIM_ERROR_H_
