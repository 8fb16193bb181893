#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lotscale/dataset.hpp"
#include "lotscale/rng.hpp"

namespace lotscale {

// Target function registry entry. Ids are stable strings used in configs.
struct TargetFunction {
  std::string id;
  int arity = 1;
  std::function<double(const Eigen::VectorXd&)> eval;
};

inline const std::vector<TargetFunction>& target_registry() {
  static const std::vector<TargetFunction> registry = [] {
    std::vector<TargetFunction> r;
    auto unary = [&r](const std::string& id, double (*f)(double)) {
      r.push_back({id, 1, [f](const Eigen::VectorXd& x) { return f(x[0]); }});
    };
    unary("x2", [](double x) { return x * x; });
    unary("x3", [](double x) { return x * x * x; });
    unary("x4", [](double x) { return x * x * x * x; });
    unary("sin", [](double x) { return std::sin(x); });
    unary("cos", [](double x) { return std::cos(x); });
    unary("exp", [](double x) { return std::exp(x); });
    unary("sin2", [](double x) { const double s = std::sin(x); return s * s; });
    unary("exp_x2", [](double x) { return std::exp(x * x); });
    unary("relu", [](double x) { return x > 0.0 ? x : 0.0; });
    unary("tanh", [](double x) { return std::tanh(x); });
    for (int k = 2; k <= 5; ++k) {
      r.push_back({"prod" + std::to_string(k), k, [](const Eigen::VectorXd& x) {
                     double p = 1.0;
                     for (int j = 0; j < x.size(); ++j) p *= x[j];
                     return p;
                   }});
    }
    return r;
  }();
  return registry;
}

inline const TargetFunction& find_target(const std::string& id) {
  for (const auto& t : target_registry())
    if (t.id == id) return t;
  throw std::invalid_argument("unknown target id '" + id + "'");
}

inline double eval_target(const TargetFunction& t, const Eigen::VectorXd& x) {
  if (x.size() != t.arity)
    throw std::invalid_argument("eval_target: arity mismatch for '" + t.id + "'");
  return t.eval(x);
}

// Deterministic dataset construction. uniform_grid: M equally spaced points
// including both endpoints (d = 1 only). iid_uniform: M points from the
// seeded stream, axes drawn in row-major order.
inline Dataset sample_dataset(const TargetFunction& t, const Box& domain, int count,
                              SamplingMode mode, std::uint64_t seed) {
  domain.validate();
  if (domain.dim() != t.arity)
    throw std::invalid_argument("sample_dataset: domain/arity mismatch");
  if (count < 2) throw std::invalid_argument("sample_dataset: need at least 2 points");
  if (mode == SamplingMode::uniform_grid && t.arity != 1)
    throw std::invalid_argument("sample_dataset: uniform_grid requires d = 1");

  Dataset ds;
  ds.domain = domain;
  ds.mode = mode;
  ds.seed = seed;
  ds.inputs.resize(count, t.arity);
  ds.labels.resize(count);

  if (mode == SamplingMode::uniform_grid) {
    const double lo = domain.lo[0], hi = domain.hi[0];
    for (int i = 0; i < count; ++i)
      ds.inputs(i, 0) = i == count - 1 ? hi : lo + (hi - lo) * i / (count - 1);
  } else {
    RandomStream rng(seed);
    for (int i = 0; i < count; ++i)
      for (int j = 0; j < t.arity; ++j)
        ds.inputs(i, j) = rng.uniform(domain.lo[j], domain.hi[j]);
  }
  for (int i = 0; i < count; ++i) ds.labels[i] = t.eval(ds.inputs.row(i).transpose());
  return ds;
}

}  // namespace lotscale
