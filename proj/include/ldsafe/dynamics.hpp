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
#include <optional>
#include <string>
#include <vector>

#include "ldsafe/common.hpp"

namespace ldsafe {

enum class ModelKind { FirstOrder, Mechanical };

/// Weakly perturbed system dX = b(X) dt + sqrt(eps) sigma dW with constant sigma.
///
/// First-order models carry an n-dimensional drift and an invertible n x n sigma.
/// Mechanical models split the state into positions eta and velocities nu (m each);
/// the supplied field is the acceleration b(eta), and sigma is m x m acting on the
/// velocity block only, so the diffusion of the full state is degenerate.
///
/// Instances are immutable once built and may be shared between threads.
class DynamicsModel {
 public:
  using VectorField = std::function<Vec(const Vec&)>;
  using JacobianField = std::function<Mat(const Vec&)>;

  /// An empty `jacobian` selects central finite differences with step 1e-6 (1 + |x|).
  static DynamicsModel first_order(std::string name, int n, VectorField drift,
                                   JacobianField jacobian, Mat sigma);
  static DynamicsModel mechanical(std::string name, int m, VectorField acceleration,
                                  JacobianField jacobian, Mat sigma);
  /// First-order model with drift a x + c.
  static DynamicsModel affine(std::string name, Mat a, Vec c, Mat sigma);

  const std::string& name() const { return name_; }
  ModelKind kind() const { return kind_; }
  bool is_mechanical() const { return kind_ == ModelKind::Mechanical; }
  /// Full state dimension n (2m for mechanical models).
  int dimension() const { return n_; }
  /// Dimension of w and of the Wiener process (n or m).
  int noise_dimension() const { return d_; }
  /// m for mechanical models, n otherwise.
  int position_dimension() const { return is_mechanical() ? d_ : n_; }
  bool has_analytic_jacobian() const { return analytic_jacobian_; }

  const Mat& sigma() const { return sigma_; }
  /// a = sigma sigma^T on the noise block.
  const Mat& noise_covariance() const { return covariance_; }

  /// Time derivative of the full state; (nu, b(eta)) for mechanical models.
  Vec drift(const Vec& x) const;
  /// n x n Jacobian of `drift`.
  Mat drift_jacobian(const Vec& x) const;
  /// J(x)^T v without forming the stacked Jacobian for mechanical models.
  Vec drift_vjp(const Vec& x, const Vec& v) const;

  /// The raw user field: b for first-order, the acceleration for mechanical models.
  Vec field(const Vec& x) const;
  /// Same as `field`; affine models write into `out` without allocating.
  void field_into(const Vec& x, Vec& out) const;
  Mat field_jacobian(const Vec& x) const;

  /// Embeds sigma w into the full state (velocity block for mechanical models).
  Vec inject(const Vec& w) const;
  /// sigma^T applied to the noise block of an adjoint vector.
  Vec project_adjoint(const Vec& lambda) const;
  /// Solves sigma w = r for a noise-block residual r.
  Vec solve_sigma(const Vec& r) const;

 private:
  DynamicsModel() = default;
  void finalize();

  std::string name_;
  ModelKind kind_ = ModelKind::FirstOrder;
  int n_ = 0;
  int d_ = 0;
  VectorField field_;
  JacobianField field_jacobian_;
  bool analytic_jacobian_ = false;
  bool affine_ = false;
  Mat affine_a_;
  Vec affine_c_;
  Mat sigma_;
  Mat covariance_;
  Eigen::FullPivLU<Mat> sigma_lu_;
};

/// Column-by-column central differences of `field` with step 1e-6 (1 + |x|).
Mat finite_difference_jacobian(const DynamicsModel::VectorField& field, const Vec& x);

/// Node times t_0 = 0 < t_1 < ... < t_N = T.
class TimeGrid {
 public:
  TimeGrid() = default;
  explicit TimeGrid(std::vector<double> times);
  static TimeGrid uniform(double duration, int intervals);

  int intervals() const { return static_cast<int>(times_.size()) - 1; }
  std::size_t size() const { return times_.size(); }
  double operator[](std::size_t k) const { return times_[k]; }
  double final_time() const { return times_.back(); }
  const std::vector<double>& times() const { return times_; }

 private:
  std::vector<double> times_{0.0};
};

/// A discrete path: states phi_k at every node and optional deviations w_k.
struct Path {
  TimeGrid grid;
  std::vector<Vec> states;
  std::vector<Vec> deviations;  // empty when absent

  bool has_deviations() const { return !deviations.empty(); }
  void validate() const;
  /// Linear interpolation of the state at time t (clamped to the grid).
  Vec state_at(double t) const;
};

Vec drift(const DynamicsModel& model, const Vec& x);

/// Classical RK4 integration of dx/dt = b(x) on a uniform grid with `intervals` steps.
Path flow_deterministic(const DynamicsModel& model, const Vec& x0, double duration,
                        int intervals);

/// One RK4 step of dx/dt = b(x) + inject(w) with control samples at the step start,
/// midpoint and end.
Vec rk4_step(const DynamicsModel& model, const Vec& x, double h, const Vec& w_begin,
             const Vec& w_mid, const Vec& w_end);

}  // namespace ldsafe
