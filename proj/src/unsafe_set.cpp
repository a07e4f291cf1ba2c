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

#include "ldsafe/unsafe_set.hpp"

#include <utility>

namespace ldsafe {

UnsafeSet::UnsafeSet(std::string name, Level level, Gradient gradient,
                     std::vector<int> components, double margin)
    : name_(std::move(name)),
      level_(std::move(level)),
      gradient_(std::move(gradient)),
      components_(std::move(components)),
      margin_(margin) {
  if (!level_ || !gradient_) throw std::invalid_argument("UnsafeSet: level and gradient required");
  if (margin_ < 0.0) throw std::invalid_argument("UnsafeSet: margin must be non-negative");
}

Vec UnsafeSet::select(const Vec& x) const {
  if (components_.empty()) return x;
  Vec out(static_cast<Eigen::Index>(components_.size()));
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const int c = components_[i];
    if (c < 0 || c >= x.size()) throw DimensionError("UnsafeSet: component out of range");
    out[static_cast<Eigen::Index>(i)] = x[c];
  }
  return out;
}

double UnsafeSet::level(const Vec& x) const {
  if (components_.empty()) return level_(x);
  // Reused per thread; level() is on the Monte Carlo hot path.
  thread_local Vec scratch;
  scratch.resize(static_cast<Eigen::Index>(components_.size()));
  for (std::size_t i = 0; i < components_.size(); ++i) {
    const int c = components_[i];
    if (c < 0 || c >= x.size()) throw DimensionError("UnsafeSet: component out of range");
    scratch[static_cast<Eigen::Index>(i)] = x[c];
  }
  return level_(scratch);
}

Vec UnsafeSet::gradient(const Vec& x) const {
  const Vec g = gradient_(select(x));
  if (components_.empty()) {
    require_dimension(g, x.size(), "UnsafeSet::gradient");
    return g;
  }
  Vec full = Vec::Zero(x.size());
  for (std::size_t i = 0; i < components_.size(); ++i) {
    full[components_[i]] += g[static_cast<Eigen::Index>(i)];
  }
  return full;
}

UnsafeSet UnsafeSet::threshold(int component, double threshold) {
  return UnsafeSet(
      "threshold",
      [threshold](const Vec& z) { return threshold - z[0]; },
      [](const Vec&) { return Vec::Constant(1, -1.0); }, {component});
}

UnsafeSet UnsafeSet::symmetric_threshold(int component, double threshold) {
  const double sq = threshold * threshold;
  return UnsafeSet(
      "symmetric_threshold",
      [sq](const Vec& z) { return sq - z[0] * z[0]; },
      [](const Vec& z) { return Vec::Constant(1, -2.0 * z[0]); }, {component});
}

UnsafeSet UnsafeSet::collision(int first_position, int second_position, double gamma) {
  std::vector<int> comps;
  for (int i = 0; i < 3; ++i) comps.push_back(first_position + i);
  for (int i = 0; i < 3; ++i) comps.push_back(second_position + i);
  return UnsafeSet(
      "collision",
      [gamma](const Vec& z) { return (z.head<3>() - z.tail<3>()).squaredNorm() - gamma; },
      [](const Vec& z) {
        Vec g(6);
        const Eigen::Vector3d diff = z.head<3>() - z.tail<3>();
        g.head<3>() = 2.0 * diff;
        g.tail<3>() = -2.0 * diff;
        return g;
      },
      comps, gamma);
}

}  // namespace ldsafe
