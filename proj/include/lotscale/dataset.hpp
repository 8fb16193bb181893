#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <fstream>
#include <stdexcept>
#include <string>

namespace lotscale {

// Axis-aligned box domain, one (lo, hi) pair per input axis.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  static Box cube(double lo, double hi, int dim) {
    Box b;
    b.lo = Eigen::VectorXd::Constant(dim, lo);
    b.hi = Eigen::VectorXd::Constant(dim, hi);
    b.validate();
    return b;
  }

  int dim() const { return static_cast<int>(lo.size()); }

  double volume() const {
    double v = 1.0;
    for (int j = 0; j < dim(); ++j) v *= hi[j] - lo[j];
    return v;
  }

  void validate() const {
    if (lo.size() != hi.size() || lo.size() == 0)
      throw std::invalid_argument("Box: lo/hi dimension mismatch");
    for (int j = 0; j < dim(); ++j)
      if (!(lo[j] < hi[j]))
        throw std::invalid_argument("Box: requires lo < hi on every axis");
  }
};

enum class SamplingMode { uniform_grid, iid_uniform };

inline const char* sampling_mode_name(SamplingMode m) {
  return m == SamplingMode::uniform_grid ? "grid" : "iid";
}

// Immutable sample set. Labels are filled from the target function at
// construction time and never touched afterwards.
struct Dataset {
  Eigen::MatrixXd inputs;  // M x d
  Eigen::VectorXd labels;  // M
  Box domain;
  SamplingMode mode = SamplingMode::uniform_grid;
  std::uint64_t seed = 0;

  int size() const { return static_cast<int>(inputs.rows()); }
  int dim() const { return static_cast<int>(inputs.cols()); }
};

// Quadrature weights for function inner products under the dataset:
// trapezoid weights for 1-D grids, volume/M for iid samples. Both estimate
// the plain integral over the domain box.
inline Eigen::VectorXd quadrature_weights(const Dataset& ds) {
  const int m = ds.size();
  if (m < 1) throw std::invalid_argument("quadrature_weights: empty dataset");
  if (ds.mode == SamplingMode::uniform_grid && ds.dim() == 1 && m >= 2) {
    const double h = (ds.domain.hi[0] - ds.domain.lo[0]) / (m - 1);
    Eigen::VectorXd w = Eigen::VectorXd::Constant(m, h);
    w[0] = 0.5 * h;
    w[m - 1] = 0.5 * h;
    return w;
  }
  return Eigen::VectorXd::Constant(m, ds.domain.volume() / m);
}

// CSV persistence for inspection: header row x1..xd,y.
inline void write_dataset_csv(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_dataset_csv: cannot open " + path);
  for (int j = 0; j < ds.dim(); ++j) out << "x" << (j + 1) << ",";
  out << "y\n";
  char buf[32];
  for (int i = 0; i < ds.size(); ++i) {
    for (int j = 0; j < ds.dim(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", ds.inputs(i, j));
      out << buf << ",";
    }
    std::snprintf(buf, sizeof(buf), "%.17g", ds.labels[i]);
    out << buf << "\n";
  }
}

}  // namespace lotscale
