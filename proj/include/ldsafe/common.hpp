/*
Copyright 2026 The ldsafe Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

     https://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace ldsafe {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Inputs whose sizes disagree with the model they are used with.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A trajectory, weight or estimate left the finite range.
class DivergenceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Optimizer could not produce any acceptable solution.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require_dimension(const Vec& x, Eigen::Index n, const char* what) {
  if (x.size() != n) {
    throw DimensionError(std::string(what) + ": expected dimension " + std::to_string(n) +
                         ", got " + std::to_string(x.size()));
  }
}

inline bool all_finite(const Vec& x) { return x.allFinite(); }

}  // namespace ldsafe
