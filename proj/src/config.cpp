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

#include "ldsafe/config.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include <toml.hpp>

namespace ldsafe {
namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s = buf;
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

std::string format_vec(const Vec& v) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) s += ", ";
    s += format_double(v[i]);
  }
  return s + "]";
}

std::string format_mat(const Mat& m) {
  std::string s = "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    if (i) s += ", ";
    s += format_vec(m.row(i).transpose());
  }
  return s + "]";
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}

// Reads keys from one table and remembers which ones were used.
class Section {
 public:
  Section(const toml::table* table, std::string name) : table_(table), name_(std::move(name)) {}

  bool has(const std::string& key) const { return table_ && table_->contains(key); }

  double number(const std::string& key, double fallback) {
    const toml::node* n = take(key);
    if (!n) return fallback;
    if (auto v = n->value<double>()) return *v;
    fail(key, "expected a number");
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    const toml::node* n = take(key);
    if (!n) return fallback;
    if (auto v = n->as_integer()) return v->get();
    fail(key, "expected an integer");
  }

  std::string text(const std::string& key, const std::string& fallback) {
    const toml::node* n = take(key);
    if (!n) return fallback;
    if (auto v = n->value<std::string>()) return *v;
    fail(key, "expected a string");
  }

  std::optional<Vec> vector(const std::string& key) {
    const toml::node* n = take(key);
    if (!n) return std::nullopt;
    return to_vec(*n, key);
  }

  std::optional<Mat> matrix(const std::string& key) {
    const toml::node* n = take(key);
    if (!n) return std::nullopt;
    const toml::array* rows = n->as_array();
    if (!rows || rows->empty()) fail(key, "expected a nonempty array of rows");
    std::vector<Vec> r;
    for (const toml::node& row : *rows) r.push_back(to_vec(row, key));
    Mat m(static_cast<Eigen::Index>(r.size()), r.front().size());
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (r[i].size() != m.cols()) fail(key, "rows have different lengths");
      m.row(static_cast<Eigen::Index>(i)) = r[i].transpose();
    }
    return m;
  }

  void finish() const {
    if (!table_) return;
    for (auto&& [key, value] : *table_) {
      (void)value;
      const std::string k(key.str());
      if (!used_.count(k)) throw ConfigError("unknown key '" + k + "' in " + name_);
    }
  }

 private:
  const toml::node* take(const std::string& key) {
    if (!table_) return nullptr;
    used_.insert(key);
    return table_->get(key);
  }

  Vec to_vec(const toml::node& n, const std::string& key) const {
    const toml::array* arr = n.as_array();
    if (!arr || arr->empty()) fail(key, "expected a nonempty array of numbers");
    Vec v(static_cast<Eigen::Index>(arr->size()));
    for (std::size_t i = 0; i < arr->size(); ++i) {
      auto x = (*arr)[i].value<double>();
      if (!x) fail(key, "expected a nonempty array of numbers");
      v[static_cast<Eigen::Index>(i)] = *x;
    }
    return v;
  }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(name_ + "." + key + ": " + what);
  }

  const toml::table* table_;
  std::string name_;
  std::set<std::string> used_;
};

const toml::table* subtable(const toml::table& root, const std::string& name) {
  const toml::node* n = root.get(name);
  if (!n) return nullptr;
  const toml::table* t = n->as_table();
  if (!t) throw ConfigError("'" + name + "' must be a table");
  return t;
}

InitialGuessKind parse_guess(const std::string& s) {
  if (s == "auto") return InitialGuessKind::Auto;
  if (s == "straight_line") return InitialGuessKind::StraightLine;
  if (s == "deterministic") return InitialGuessKind::Deterministic;
  throw ConfigError("solver.initial_guess: expected auto, straight_line or deterministic");
}

const char* guess_name(InitialGuessKind k) {
  switch (k) {
    case InitialGuessKind::StraightLine: return "straight_line";
    case InitialGuessKind::Deterministic: return "deterministic";
    default: return "auto";
  }
}

Vec to_vec3(const Eigen::Vector3d& v) { return Vec(v); }

Eigen::Vector3d as_vector3(const Vec& v, const char* key) {
  if (v.size() != 3) throw ConfigError(std::string("model.") + key + ": expected 3 components");
  return Eigen::Vector3d(v[0], v[1], v[2]);
}

bool is_scalar_kind(const std::string& kind) { return kind == "brownian" || kind == "linear"; }

int model_dimension(const ScenarioConfig& c) {
  if (c.model.kind == "conjunction") return 12;
  if (is_scalar_kind(c.model.kind)) return 1;
  return static_cast<int>(c.model.a.rows());
}

}  // namespace

ScenarioConfig parse_config(const std::string& text, const std::string& source) {
  toml::table root;
  try {
    root = toml::parse(text, source);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << source << ":" << e.source().begin.line << ": " << e.description();
    throw ConfigError(msg.str());
  }
  ScenarioConfig c;
  Section top(&root, "top level");
  c.name = top.text("name", c.name);
  c.description = top.text("description", c.description);
  {
    std::set<std::string> tables = {"model", "unsafe_set", "prior", "solver", "mc"};
    for (auto&& [key, value] : root) {
      const std::string k(key.str());
      if (k == "name" || k == "description") continue;
      if (!tables.count(k)) throw ConfigError("unknown key '" + k + "' in top level");
      if (!value.is_table()) throw ConfigError("'" + k + "' must be a table");
    }
  }

  Section model(subtable(root, "model"), "model");
  c.model.kind = model.text("kind", c.model.kind);
  c.model.eps = model.number("eps", c.model.eps);
  if (c.model.kind == "linear") {
    c.model.rate = model.number("rate", 1.0);
  } else if (c.model.kind == "affine") {
    auto a = model.matrix("a");
    if (!a) throw ConfigError("model.a is required for affine models");
    c.model.a = *a;
    const Eigen::Index n = c.model.a.rows();
    c.model.c = model.vector("c").value_or(Vec::Zero(n));
    c.model.sigma = model.matrix("sigma").value_or(Mat::Identity(n, n));
  } else if (c.model.kind == "conjunction") {
    const ConjunctionConfig d;
    c.model.gm = model.number("gm", d.gm);
    c.model.r1 = model.vector("r1").value_or(to_vec3(d.r1));
    c.model.r2 = model.vector("r2").value_or(to_vec3(d.r2));
    c.model.v1 = model.vector("v1");
    c.model.v2 = model.vector("v2");
    c.model.miss_distance = model.number("miss_distance", d.miss_distance);
    c.model.noise = model.number("sigma", d.sigma);
  } else if (c.model.kind != "brownian") {
    throw ConfigError("model.kind: expected brownian, linear, affine or conjunction");
  }
  model.finish();

  Section unsafe(subtable(root, "unsafe_set"), "unsafe_set");
  const bool conj = c.model.kind == "conjunction";
  c.unsafe.kind = unsafe.text("kind", conj ? "collision" : "threshold");
  if (c.unsafe.kind == "threshold" || c.unsafe.kind == "symmetric_threshold") {
    c.unsafe.component = static_cast<int>(unsafe.integer("component", 0));
    c.unsafe.threshold = unsafe.number("threshold", c.unsafe.threshold);
  } else if (c.unsafe.kind == "collision") {
    c.unsafe.gamma = unsafe.number("gamma", c.unsafe.gamma);
  } else {
    throw ConfigError("unsafe_set.kind: expected threshold, symmetric_threshold or collision");
  }
  unsafe.finish();

  Section prior(subtable(root, "prior"), "prior");
  if (conj) {
    c.prior.position_variance = prior.number("position_variance", c.prior.position_variance);
    c.prior.velocity_variance = prior.number("velocity_variance", c.prior.velocity_variance);
  } else {
    const int n = model_dimension(c);
    c.prior.mean = prior.vector("mean").value_or(Vec::Zero(n));
    auto cov = prior.matrix("covariance");
    auto var = prior.vector("variance");
    if (cov && var) throw ConfigError("prior: give either covariance or variance, not both");
    if (cov) {
      c.prior.covariance = *cov;
    } else if (var) {
      c.prior.covariance = var->asDiagonal().toDenseMatrix();
    } else {
      c.prior.covariance = Mat::Identity(n, n);
    }
  }
  prior.finish();

  Section solver(subtable(root, "solver"), "solver");
  if (auto w = solver.vector("window")) {
    if (w->size() != 2) throw ConfigError("solver.window: expected [lower, upper]");
    c.window = {(*w)[0], (*w)[1]};
  } else if (conj) {
    c.window = ConjunctionConfig{}.window;
  }
  SolverOptions& o = c.solver;
  o.nodes = static_cast<int>(solver.integer("nodes", o.nodes));
  o.constraint_tol = solver.number("constraint_tol", o.constraint_tol);
  o.gradient_tol = solver.number("gradient_tol", o.gradient_tol);
  o.complementarity_tol = solver.number("complementarity_tol", o.complementarity_tol);
  o.max_iterations = static_cast<int>(solver.integer("max_iterations", o.max_iterations));
  o.max_outer_iterations =
      static_cast<int>(solver.integer("max_outer_iterations", o.max_outer_iterations));
  o.scan_points = static_cast<int>(solver.integer("scan_points", o.scan_points));
  o.lbfgs_memory = static_cast<int>(solver.integer("lbfgs_memory", o.lbfgs_memory));
  o.initial_guess = parse_guess(solver.text("initial_guess", guess_name(o.initial_guess)));
  solver.finish();

  Section mc(subtable(root, "mc"), "mc");
  if (conj) {
    c.mc.dt = 1.0;
    c.mc.paths = 10000;
  }
  c.mc.dt = mc.number("dt", c.mc.dt);
  c.mc.paths = static_cast<int>(mc.integer("paths", c.mc.paths));
  const std::int64_t seed = mc.integer("seed", static_cast<std::int64_t>(c.mc.seed));
  if (seed < 0) throw ConfigError("mc.seed must be nonnegative");
  c.mc.seed = static_cast<std::uint64_t>(seed);
  mc.finish();

  if (o.nodes < 2) throw ConfigError("solver.nodes must be at least 2");
  if (!(c.mc.dt > 0.0)) throw ConfigError("mc.dt must be positive");
  if (c.mc.paths < 1) throw ConfigError("mc.paths must be positive");
  return c;
}

ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str(), path);
}

std::string to_toml(const ScenarioConfig& c) {
  std::ostringstream out;
  out << "name = " << quote(c.name) << "\n";
  out << "description = " << quote(c.description) << "\n\n";
  out << "[model]\nkind = " << quote(c.model.kind) << "\neps = " << format_double(c.model.eps)
      << "\n";
  if (c.model.kind == "linear") out << "rate = " << format_double(c.model.rate) << "\n";
  if (c.model.kind == "affine") {
    out << "a = " << format_mat(c.model.a) << "\nc = " << format_vec(c.model.c)
        << "\nsigma = " << format_mat(c.model.sigma) << "\n";
  }
  const bool conj = c.model.kind == "conjunction";
  if (conj) {
    out << "gm = " << format_double(c.model.gm) << "\nr1 = " << format_vec(c.model.r1)
        << "\nr2 = " << format_vec(c.model.r2) << "\n";
    if (c.model.v1) out << "v1 = " << format_vec(*c.model.v1) << "\n";
    if (c.model.v2) out << "v2 = " << format_vec(*c.model.v2) << "\n";
    out << "miss_distance = " << format_double(c.model.miss_distance)
        << "\nsigma = " << format_double(c.model.noise) << "\n";
  }
  out << "\n[unsafe_set]\nkind = " << quote(c.unsafe.kind) << "\n";
  if (c.unsafe.kind == "collision") {
    out << "gamma = " << format_double(c.unsafe.gamma) << "\n";
  } else {
    out << "component = " << c.unsafe.component
        << "\nthreshold = " << format_double(c.unsafe.threshold) << "\n";
  }
  out << "\n[prior]\n";
  if (conj) {
    out << "position_variance = " << format_double(c.prior.position_variance)
        << "\nvelocity_variance = " << format_double(c.prior.velocity_variance) << "\n";
  } else {
    out << "mean = " << format_vec(c.prior.mean)
        << "\ncovariance = " << format_mat(c.prior.covariance) << "\n";
  }
  const SolverOptions& o = c.solver;
  out << "\n[solver]\nwindow = [" << format_double(c.window.lower) << ", "
      << format_double(c.window.upper) << "]\nnodes = " << o.nodes
      << "\nconstraint_tol = " << format_double(o.constraint_tol)
      << "\ngradient_tol = " << format_double(o.gradient_tol)
      << "\ncomplementarity_tol = " << format_double(o.complementarity_tol)
      << "\nmax_iterations = " << o.max_iterations
      << "\nmax_outer_iterations = " << o.max_outer_iterations
      << "\nscan_points = " << o.scan_points << "\nlbfgs_memory = " << o.lbfgs_memory
      << "\ninitial_guess = " << quote(guess_name(o.initial_guess)) << "\n";
  out << "\n[mc]\ndt = " << format_double(c.mc.dt) << "\npaths = " << c.mc.paths
      << "\nseed = " << c.mc.seed << "\n";
  return out.str();
}

ScenarioConfig builtin_config(const std::string& name) {
  ScenarioConfig c;
  c.name = name;
  c.prior.mean = Vec::Zero(1);
  c.prior.covariance = Mat::Identity(1, 1);
  if (name == "brownian1d" || name == "brownian1d-free" || name == "double-target") {
    const Scenario s = builtin_scenario(name);
    c.description = s.description;
    c.model.kind = "brownian";
    c.window = s.window;
    if (name == "double-target") c.unsafe.kind = "symmetric_threshold";
    return c;
  }
  if (name == "ou1d") {
    c.description = builtin_scenario(name).description;
    c.model.kind = "linear";
    c.model.rate = 1.0;
    return c;
  }
  if (name == "conjunction") {
    const ConjunctionConfig d;
    const Scenario s = builtin_scenario(name);
    c.description = s.description;
    c.model.kind = "conjunction";
    c.model.eps = d.eps;
    c.model.gm = d.gm;
    c.model.r1 = d.r1;
    c.model.r2 = d.r2;
    c.model.miss_distance = d.miss_distance;
    c.model.noise = d.sigma;
    c.unsafe.kind = "collision";
    c.unsafe.gamma = d.gamma;
    c.prior = {};
    c.prior.position_variance = d.position_variance;
    c.prior.velocity_variance = d.velocity_variance;
    c.window = d.window;
    c.mc = s.mc;
    return c;
  }
  throw ConfigError("unknown built-in scenario: " + name);
}

Scenario build_scenario(const ScenarioConfig& c) {
  try {
    if (c.model.kind == "conjunction") {
      if (c.unsafe.kind != "collision") {
        throw ConfigError("conjunction scenarios need a collision unsafe set");
      }
      ConjunctionConfig cc;
      cc.gm = c.model.gm;
      cc.r1 = as_vector3(c.model.r1, "r1");
      cc.r2 = as_vector3(c.model.r2, "r2");
      if (c.model.v1.has_value() != c.model.v2.has_value()) {
        throw ConfigError("model: give both v1 and v2 or neither");
      }
      if (c.model.v1) {
        cc.v1 = as_vector3(*c.model.v1, "v1");
        cc.v2 = as_vector3(*c.model.v2, "v2");
      }
      cc.miss_distance = c.model.miss_distance;
      cc.gamma = c.unsafe.gamma;
      cc.eps = c.model.eps;
      cc.sigma = c.model.noise;
      cc.position_variance = c.prior.position_variance;
      cc.velocity_variance = c.prior.velocity_variance;
      cc.window = c.window;
      Scenario s = two_body_conjunction(cc);
      s.name = c.name;
      if (!c.description.empty()) s.description = c.description;
      s.solver = c.solver;
      s.mc = c.mc;
      return s;
    }
    if (c.unsafe.kind == "collision") {
      throw ConfigError("collision unsafe sets need a conjunction model");
    }
    const int n = model_dimension(c);
    DynamicsModel model = [&] {
      if (c.model.kind == "brownian") {
        return DynamicsModel::affine("brownian", Mat::Zero(1, 1), Vec::Zero(1), Mat::Identity(1, 1));
      }
      if (c.model.kind == "linear") {
        if (!(c.model.rate >= 0.0)) throw ConfigError("model.rate must be nonnegative");
        return DynamicsModel::affine("linear", Mat::Constant(1, 1, -c.model.rate), Vec::Zero(1),
                                     Mat::Identity(1, 1));
      }
      return DynamicsModel::affine("affine", c.model.a, c.model.c, c.model.sigma);
    }();
    if (c.unsafe.component < 0 || c.unsafe.component >= n) {
      throw ConfigError("unsafe_set.component out of range");
    }
    UnsafeSet unsafe = c.unsafe.kind == "threshold"
                           ? UnsafeSet::threshold(c.unsafe.component, c.unsafe.threshold)
                           : UnsafeSet::symmetric_threshold(c.unsafe.component, c.unsafe.threshold);
    if (c.prior.mean.size() != n || c.prior.covariance.rows() != n ||
        c.prior.covariance.cols() != n) {
      throw ConfigError("prior dimension does not match the model");
    }
    Scenario s{c.name,
               c.description,
               std::move(model),
               std::move(unsafe),
               InitialDistribution(c.prior.mean, c.prior.covariance),
               c.model.eps,
               c.window,
               c.solver,
               c.mc};
    s.validate();
    return s;
  } catch (const ConfigError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

std::string config_hash(const ScenarioConfig& config) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : to_toml(config)) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

}  // namespace ldsafe
