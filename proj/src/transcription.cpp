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

#include "ldsafe/transcription.hpp"

#include <algorithm>
#include <cmath>

namespace ldsafe {

struct Transcription::Sweep {
  double time = 0.0;
  ControlSamples controls;
  std::vector<Vec> nodes;  // phi_0 .. phi_N
  // Per interval: stage points y2, y3, y4 and stage derivatives F1..F4 (physical time).
  std::vector<Vec> y2, y3, y4;
  std::vector<Vec> f1, f2, f3, f4;
};

Transcription::Transcription(const DynamicsModel& model, const UnsafeSet& unsafe,
                             TranscriptionSetup setup)
    : model_(model), unsafe_(unsafe), setup_(std::move(setup)) {
  if (setup_.intervals < 2) throw std::invalid_argument("Transcription: need at least 2 intervals");
  n_ = model_.dimension();
  d_ = model_.noise_dimension();
  if (!(setup_.t_min > 0.0) || setup_.t_max < setup_.t_min) {
    throw std::invalid_argument("Transcription: invalid time bounds");
  }
  if (setup_.free_time && !(setup_.t_max > setup_.t_min)) {
    throw std::invalid_argument("Transcription: free time needs t_min < t_max");
  }
  if (!(setup_.reference_time > 0.0)) throw std::invalid_argument("Transcription: reference time");
  if (!(setup_.constraint_scale > 0.0)) throw std::invalid_argument("Transcription: constraint scale");
  const int n_int = setup_.intervals;
  mid_offset_ = (n_int + 1) * d_;
  start_offset_ = mid_offset_ + n_int * d_;
  time_offset_ = start_offset_;
  if (free_start()) {
    if (setup_.prior->dimension() != n_) throw DimensionError("Transcription: prior dimension");
    if (!(setup_.eps > 0.0)) throw std::invalid_argument("Transcription: eps must be positive");
    start_map_ = setup_.prior->cholesky_factor() / std::sqrt(setup_.eps);
    start_map_inv_t_ = start_map_.inverse().transpose();
    time_offset_ = start_offset_ + n_;
  } else {
    require_dimension(setup_.start, n_, "Transcription start");
  }
  size_ = time_offset_ + (setup_.free_time ? 1 : 0);
}

double Transcription::node_weight(int k) const {
  return (k == 0 || k == setup_.intervals) ? 1.0 / 6.0 : 1.0 / 3.0;
}

double Transcription::time_from_angle(double angle) const {
  return setup_.t_min + 0.5 * (setup_.t_max - setup_.t_min) * (1.0 + std::sin(angle));
}

double Transcription::angle_from_time(double time) const {
  const double u = 2.0 * (time - setup_.t_min) / (setup_.t_max - setup_.t_min) - 1.0;
  return std::asin(std::clamp(u, -1.0, 1.0));
}

double Transcription::time_derivative(double angle) const {
  return 0.5 * (setup_.t_max - setup_.t_min) * std::cos(angle);
}

Vec Transcription::encode(const ControlSamples& controls, const Vec& start, double time) const {
  const int n_int = setup_.intervals;
  if (static_cast<int>(controls.node.size()) != n_int + 1 ||
      static_cast<int>(controls.mid.size()) != n_int) {
    throw DimensionError("Transcription::encode: control sample count");
  }
  const double dtau = 1.0 / n_int;
  Vec x = Vec::Zero(size_);
  for (int k = 0; k <= n_int; ++k) {
    const double c = std::sqrt(setup_.reference_time * dtau * node_weight(k));
    x.segment(k * d_, d_) = c * controls.node[k];
  }
  const double cm = std::sqrt(setup_.reference_time * dtau * (2.0 / 3.0));
  for (int k = 0; k < n_int; ++k) x.segment(mid_offset_ + k * d_, d_) = cm * controls.mid[k];
  if (free_start()) {
    require_dimension(start, n_, "Transcription::encode start");
    x.segment(start_offset_, n_) = start_map_.lu().solve(Vec(start - setup_.prior->mean()));
  }
  if (setup_.free_time) x[time_offset_] = angle_from_time(time);
  return x;
}

ControlSamples Transcription::controls(const Vec& x) const {
  const int n_int = setup_.intervals;
  const double dtau = 1.0 / n_int;
  ControlSamples out;
  out.node.resize(n_int + 1);
  out.mid.resize(n_int);
  for (int k = 0; k <= n_int; ++k) {
    const double c = std::sqrt(setup_.reference_time * dtau * node_weight(k));
    out.node[k] = x.segment(k * d_, d_) / c;
  }
  const double cm = std::sqrt(setup_.reference_time * dtau * (2.0 / 3.0));
  for (int k = 0; k < n_int; ++k) out.mid[k] = x.segment(mid_offset_ + k * d_, d_) / cm;
  return out;
}

Vec Transcription::initial_state(const Vec& x) const {
  if (!free_start()) return setup_.start;
  return setup_.prior->mean() + start_map_ * x.segment(start_offset_, n_);
}

double Transcription::final_time(const Vec& x) const {
  return setup_.free_time ? time_from_angle(x[time_offset_]) : setup_.t_min;
}

Transcription::Sweep Transcription::forward(const Vec& x) const {
  const int n_int = setup_.intervals;
  Sweep sw;
  sw.time = final_time(x);
  sw.controls = controls(x);
  sw.nodes.resize(n_int + 1);
  sw.y2.resize(n_int);
  sw.y3.resize(n_int);
  sw.y4.resize(n_int);
  sw.f1.resize(n_int);
  sw.f2.resize(n_int);
  sw.f3.resize(n_int);
  sw.f4.resize(n_int);
  const double h = sw.time / n_int;
  sw.nodes[0] = initial_state(x);
  for (int k = 0; k < n_int; ++k) {
    const Vec& phi = sw.nodes[k];
    const Vec mid_push = model_.inject(sw.controls.mid[k]);
    sw.f1[k] = model_.drift(phi) + model_.inject(sw.controls.node[k]);
    sw.y2[k] = phi + 0.5 * h * sw.f1[k];
    sw.f2[k] = model_.drift(sw.y2[k]) + mid_push;
    sw.y3[k] = phi + 0.5 * h * sw.f2[k];
    sw.f3[k] = model_.drift(sw.y3[k]) + mid_push;
    sw.y4[k] = phi + h * sw.f3[k];
    sw.f4[k] = model_.drift(sw.y4[k]) + model_.inject(sw.controls.node[k + 1]);
    sw.nodes[k + 1] = phi + (h / 6.0) * (sw.f1[k] + 2.0 * sw.f2[k] + 2.0 * sw.f3[k] + sw.f4[k]);
  }
  return sw;
}

std::vector<Vec> Transcription::states(const Vec& x) const { return forward(x).nodes; }

void Transcription::reverse(const Vec& /*x*/, const Sweep& sw, std::vector<Vec>& node_bar,
                            std::vector<Vec>& mid_bar, std::vector<Vec>* state_bar,
                            double& time_bar) const {
  const int n_int = setup_.intervals;
  const double dtau = 1.0 / n_int;
  const double s = sw.time;
  node_bar.assign(n_int + 1, Vec::Zero(d_));
  mid_bar.assign(n_int, Vec::Zero(d_));
  if (state_bar) state_bar->assign(n_int + 1, Vec::Zero(n_));
  time_bar = 0.0;

  Vec a = unsafe_.gradient(sw.nodes[n_int]);
  if (state_bar) (*state_bar)[n_int] = a;
  for (int k = n_int - 1; k >= 0; --k) {
    // Stage derivatives in tau are K_i = s F_i; bars below are adjoints of K_i.
    Vec kb1 = (dtau / 6.0) * a;
    Vec kb2 = (dtau / 3.0) * a;
    Vec kb3 = (dtau / 3.0) * a;
    const Vec kb4 = (dtau / 6.0) * a;
    Vec phi_bar = a;

    time_bar += sw.f4[k].dot(kb4);
    Vec fb = s * kb4;
    Vec yb = model_.drift_vjp(sw.y4[k], fb);
    node_bar[k + 1] += model_.project_adjoint(fb);
    phi_bar += yb;
    kb3 += dtau * yb;

    time_bar += sw.f3[k].dot(kb3);
    fb = s * kb3;
    yb = model_.drift_vjp(sw.y3[k], fb);
    mid_bar[k] += model_.project_adjoint(fb);
    phi_bar += yb;
    kb2 += 0.5 * dtau * yb;

    time_bar += sw.f2[k].dot(kb2);
    fb = s * kb2;
    yb = model_.drift_vjp(sw.y2[k], fb);
    mid_bar[k] += model_.project_adjoint(fb);
    phi_bar += yb;
    kb1 += 0.5 * dtau * yb;

    time_bar += sw.f1[k].dot(kb1);
    fb = s * kb1;
    yb = model_.drift_vjp(sw.nodes[k], fb);
    node_bar[k] += model_.project_adjoint(fb);
    phi_bar += yb;

    a = std::move(phi_bar);
    if (state_bar) (*state_bar)[k] = a;
  }
}

TranscriptionEval Transcription::evaluate(const Vec& x, bool with_gradient) const {
  require_dimension(x, size_, "Transcription::evaluate");
  const int n_int = setup_.intervals;
  const double dtau = 1.0 / n_int;
  const Sweep sw = forward(x);
  const double s = sw.time;
  TranscriptionEval out;

  double weighted = 0.0;
  for (int k = 0; k <= n_int; ++k) weighted += node_weight(k) * sw.controls.node[k].squaredNorm();
  for (int k = 0; k < n_int; ++k) weighted += (2.0 / 3.0) * sw.controls.mid[k].squaredNorm();
  out.action = 0.5 * s * dtau * weighted;
  if (free_start()) out.prior_cost = 0.5 * x.segment(start_offset_, n_).squaredNorm();
  out.level = unsafe_.level(sw.nodes[n_int]);
  if (!with_gradient) return out;

  out.grad_action = Vec::Zero(size_);
  out.grad_prior = Vec::Zero(size_);
  out.grad_level = Vec::Zero(size_);
  const double ratio = s / setup_.reference_time;
  out.grad_action.head(start_offset_) = ratio * x.head(start_offset_);
  if (free_start()) out.grad_prior.segment(start_offset_, n_) = x.segment(start_offset_, n_);

  std::vector<Vec> node_bar, mid_bar, state_bar;
  double time_bar = 0.0;
  reverse(x, sw, node_bar, mid_bar, free_start() ? &state_bar : nullptr, time_bar);
  for (int k = 0; k <= n_int; ++k) {
    const double c = std::sqrt(setup_.reference_time * dtau * node_weight(k));
    out.grad_level.segment(k * d_, d_) = node_bar[k] / c;
  }
  const double cm = std::sqrt(setup_.reference_time * dtau * (2.0 / 3.0));
  for (int k = 0; k < n_int; ++k) out.grad_level.segment(mid_offset_ + k * d_, d_) = mid_bar[k] / cm;
  if (free_start()) {
    out.grad_level.segment(start_offset_, n_) = start_map_.transpose() * state_bar[0];
  }
  if (setup_.free_time) {
    const double ds = time_derivative(x[time_offset_]);
    out.grad_action[time_offset_] = out.action / s * ds;
    out.grad_level[time_offset_] = time_bar * ds;
  }
  return out;
}

TranscriptionCostates Transcription::costates(const Vec& x, double alpha) const {
  const int n_int = setup_.intervals;
  const double dtau = 1.0 / n_int;
  const Sweep sw = forward(x);
  std::vector<Vec> node_bar, mid_bar, state_bar;
  double time_bar = 0.0;
  reverse(x, sw, node_bar, mid_bar, &state_bar, time_bar);
  TranscriptionCostates out;
  out.node.resize(n_int + 1);
  out.control_node.resize(n_int + 1);
  out.control_mid.resize(n_int);
  const double s = sw.time;
  for (int k = 0; k <= n_int; ++k) {
    out.node[k] = -alpha * state_bar[k];
    out.control_node[k] = -alpha * node_bar[k] / (s * dtau * node_weight(k));
  }
  for (int k = 0; k < n_int; ++k) {
    out.control_mid[k] = -alpha * mid_bar[k] / (s * dtau * (2.0 / 3.0));
  }
  return out;
}

double Transcription::stationarity(const Vec& x, const Vec& grad, double objective) const {
  const int n_int = setup_.intervals;
  const double dtau = 1.0 / n_int;
  const double s = final_time(x);
  const ControlSamples w = controls(x);
  double worst = 0.0;
  for (int k = 0; k <= n_int; ++k) {
    const double q = node_weight(k);
    const double c = std::sqrt(setup_.reference_time * dtau * q);
    const double r = grad.segment(k * d_, d_).lpNorm<Eigen::Infinity>() * c / (s * dtau * q);
    worst = std::max(worst, r / (1.0 + w.node[k].lpNorm<Eigen::Infinity>()));
  }
  const double qm = 2.0 / 3.0;
  const double cm = std::sqrt(setup_.reference_time * dtau * qm);
  for (int k = 0; k < n_int; ++k) {
    const double r = grad.segment(mid_offset_ + k * d_, d_).lpNorm<Eigen::Infinity>() * cm / (s * dtau * qm);
    worst = std::max(worst, r / (1.0 + w.mid[k].lpNorm<Eigen::Infinity>()));
  }
  if (free_start()) {
    const Vec gz = grad.segment(start_offset_, n_);
    const Vec z = x.segment(start_offset_, n_);
    worst = std::max(worst, gz.lpNorm<Eigen::Infinity>() / (1.0 + z.lpNorm<Eigen::Infinity>()));
    // Same residual in physical adjoint units: lambda(0) - eps grad S0.
    const Vec phys = start_map_inv_t_ * gz;
    const Vec scale = start_map_inv_t_ * z;
    worst = std::max(worst, phys.lpNorm<Eigen::Infinity>() / (1.0 + scale.lpNorm<Eigen::Infinity>()));
  }
  if (setup_.free_time) {
    worst = std::max(worst, std::abs(grad[time_offset_]) / (1.0 + std::abs(objective)));
  }
  return worst;
}

}  // namespace ldsafe
