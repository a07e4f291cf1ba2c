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

#include <functional>
#include <string>
#include <vector>

#include "ldsafe/common.hpp"

namespace ldsafe {

/// Unsafe region D = {z : f(z) <= 0}; the boundary is f = 0.
///
/// The level function may read a subset of the state (for instance the position block of
/// a mechanical model). `components` lists the state indices it reads, in order; an empty
/// list means the full state.
class UnsafeSet {
 public:
  using Level = std::function<double(const Vec&)>;
  using Gradient = std::function<Vec(const Vec&)>;

  UnsafeSet(std::string name, Level level, Gradient gradient,
            std::vector<int> components = {}, double margin = 0.0);

  /// D = {x : x[component] >= threshold}, f = threshold - x[component].
  static UnsafeSet threshold(int component, double threshold);
  /// D = {x : |x[component]| >= threshold}, f = threshold^2 - x[component]^2.
  static UnsafeSet symmetric_threshold(int component, double threshold);
  /// D = {|p1 - p2|^2 <= gamma} on two position triples starting at the given indices.
  static UnsafeSet collision(int first_position, int second_position, double gamma);

  const std::string& name() const { return name_; }
  double margin() const { return margin_; }
  const std::vector<int>& components() const { return components_; }

  double level(const Vec& x) const;
  /// Gradient with respect to the full state (zeros outside the selected components).
  Vec gradient(const Vec& x) const;
  bool contains(const Vec& x) const { return level(x) <= 0.0; }

 private:
  Vec select(const Vec& x) const;

  std::string name_;
  Level level_;
  Gradient gradient_;
  std::vector<int> components_;
  double margin_ = 0.0;
};

}  // namespace ldsafe
