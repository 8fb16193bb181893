#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include "lotscale/activation.hpp"
#include "lotscale/dataset.hpp"

namespace lotscale {

// ---------------------------------------------------------------------------
// One-hidden-layer network  f(x) = sum_i v_i sigma(w_i . x + b_i) + c
// ---------------------------------------------------------------------------

struct NetworkParams {
  Activation act;
  Eigen::MatrixXd first_weights;  // N x d, row i = w_i
  Eigen::VectorXd first_biases;   // N
  Eigen::VectorXd second_weights; // N
  double output_bias = 0.0;       // c

  int width() const { return static_cast<int>(first_weights.rows()); }
  int input_dim() const { return static_cast<int>(first_weights.cols()); }

  static NetworkParams zeros(const Activation& act, int width, int input_dim) {
    if (width < 1 || input_dim < 1)
      throw std::invalid_argument("NetworkParams: width and input_dim must be >= 1");
    NetworkParams p;
    p.act = act;
    p.first_weights = Eigen::MatrixXd::Zero(width, input_dim);
    p.first_biases = Eigen::VectorXd::Zero(width);
    p.second_weights = Eigen::VectorXd::Zero(width);
    p.output_bias = 0.0;
    return p;
  }

  void validate() const {
    const int n = width();
    if (n < 1 || input_dim() < 1)
      throw std::invalid_argument("NetworkParams: empty layer");
    if (first_biases.size() != n || second_weights.size() != n)
      throw std::invalid_argument("NetworkParams: inconsistent dimensions");
    if (!first_weights.allFinite() || !first_biases.allFinite() ||
        !second_weights.allFinite() || !std::isfinite(output_bias))
      throw std::invalid_argument("NetworkParams: non-finite entry");
  }

  bool all_finite() const {
    return first_weights.allFinite() && first_biases.allFinite() &&
           second_weights.allFinite() && std::isfinite(output_bias);
  }

  int param_count() const { return width() * (input_dim() + 2) + 1; }

  // Flat layout [W rows | b | v | c], row-major W. This is also the
  // serialization payload order.
  Eigen::VectorXd flatten() const {
    Eigen::VectorXd out(param_count());
    int k = 0;
    for (int i = 0; i < width(); ++i)
      for (int j = 0; j < input_dim(); ++j) out[k++] = first_weights(i, j);
    for (int i = 0; i < width(); ++i) out[k++] = first_biases[i];
    for (int i = 0; i < width(); ++i) out[k++] = second_weights[i];
    out[k++] = output_bias;
    return out;
  }

  static NetworkParams unflatten(const Activation& act, int width, int input_dim,
                                 const Eigen::VectorXd& flat) {
    NetworkParams p = zeros(act, width, input_dim);
    if (flat.size() != p.param_count())
      throw std::invalid_argument("NetworkParams::unflatten: size mismatch");
    int k = 0;
    for (int i = 0; i < width; ++i)
      for (int j = 0; j < input_dim; ++j) p.first_weights(i, j) = flat[k++];
    for (int i = 0; i < width; ++i) p.first_biases[i] = flat[k++];
    for (int i = 0; i < width; ++i) p.second_weights[i] = flat[k++];
    p.output_bias = flat[k++];
    return p;
  }
};

inline double forward(const NetworkParams& p, const Eigen::VectorXd& x) {
  if (x.size() != p.input_dim())
    throw std::invalid_argument("forward: input dimension mismatch");
  double acc = 0.0;
  for (int i = 0; i < p.width(); ++i) {
    const double pre = p.first_weights.row(i).dot(x) + p.first_biases[i];
    acc += p.second_weights[i] * activation_eval(p.act, pre, 0);
  }
  return acc + p.output_bias;
}

inline double forward(const NetworkParams& p, double x) {
  Eigen::VectorXd xv(1);
  xv[0] = x;
  return forward(p, xv);
}

// ---------------------------------------------------------------------------
// Batch evaluation. Shared by mse_loss/grad and the trainer's inner loop;
// SiLU runs through Eigen's vectorized exp (one exp per entry feeds both the
// value and the first derivative).
// ---------------------------------------------------------------------------

struct EvalWorkspace {
  Eigen::MatrixXd pre;   // M x N
  Eigen::MatrixXd post;  // sigma(pre)
  Eigen::MatrixXd dpost; // sigma'(pre)
  Eigen::VectorXd out;   // M
  Eigen::VectorXd resid; // M

  void resize(int m, int n) {
    pre.resize(m, n);
    post.resize(m, n);
    dpost.resize(m, n);
    out.resize(m);
    resid.resize(m);
  }
};

namespace detail {

inline void batch_activation(const Activation& act, const Eigen::MatrixXd& pre,
                             Eigen::MatrixXd& post, Eigen::MatrixXd* dpost) {
  switch (act.kind) {
    case ActivationKind::silu: {
      // s = 1/(1+e^-x); silu = x s; silu' = s (1 + x (1-s)), with 1-s = e^-x s.
      Eigen::ArrayXXd e = (-pre.array()).exp();
      Eigen::ArrayXXd s = 1.0 / (1.0 + e);
      post = (pre.array() * s).matrix();
      if (dpost) *dpost = (s * (1.0 + pre.array() * e * s)).matrix();
      return;
    }
    case ActivationKind::relu:
    case ActivationKind::leaky_relu: {
      const double slope = act.kind == ActivationKind::relu ? 0.0 : act.slope;
      post = (pre.array() > 0.0).select(pre, slope * pre);
      if (dpost)
        *dpost = (pre.array() > 0.0)
                     .select(Eigen::MatrixXd::Ones(pre.rows(), pre.cols()),
                             Eigen::MatrixXd::Constant(pre.rows(), pre.cols(), slope));
      return;
    }
  }
}

inline void batch_forward(const NetworkParams& p, const Eigen::MatrixXd& x,
                          EvalWorkspace& ws, bool need_deriv) {
  ws.pre.noalias() = x * p.first_weights.transpose();
  ws.pre.rowwise() += p.first_biases.transpose();
  batch_activation(p.act, ws.pre, ws.post, need_deriv ? &ws.dpost : nullptr);
  ws.out.noalias() = ws.post * p.second_weights;
  ws.out.array() += p.output_bias;
}

}  // namespace detail

inline double mse_loss(const NetworkParams& p, const Eigen::MatrixXd& x,
                       const Eigen::VectorXd& y) {
  if (x.rows() == 0) throw std::invalid_argument("mse_loss: empty dataset");
  if (x.cols() != p.input_dim() || y.size() != x.rows())
    throw std::invalid_argument("mse_loss: dimension mismatch");
  EvalWorkspace ws;
  ws.resize(static_cast<int>(x.rows()), p.width());
  detail::batch_forward(p, x, ws, false);
  ws.resid = ws.out - y;
  return ws.resid.squaredNorm() / static_cast<double>(x.rows());
}

inline double mse_loss(const NetworkParams& p, const Dataset& ds) {
  return mse_loss(p, ds.inputs, ds.labels);
}

// Exact gradient of mse_loss with respect to every parameter, same shapes as
// the parameters. Optionally reports the loss from the same pass.
inline NetworkParams grad(const NetworkParams& p, const Eigen::MatrixXd& x,
                          const Eigen::VectorXd& y, EvalWorkspace& ws,
                          double* loss_out = nullptr) {
  if (x.rows() == 0) throw std::invalid_argument("grad: empty dataset");
  if (x.cols() != p.input_dim() || y.size() != x.rows())
    throw std::invalid_argument("grad: dimension mismatch");
  const int m = static_cast<int>(x.rows());
  ws.resize(m, p.width());
  detail::batch_forward(p, x, ws, true);
  ws.resid = ws.out - y;
  if (loss_out) *loss_out = ws.resid.squaredNorm() / m;

  const double scale = 2.0 / m;
  NetworkParams g = NetworkParams::zeros(p.act, p.width(), p.input_dim());
  g.second_weights.noalias() = scale * (ws.post.transpose() * ws.resid);
  g.output_bias = scale * ws.resid.sum();
  // dL/dW_ij = scale * v_i * sum_m r_m sigma'(pre_mi) x_mj
  Eigen::MatrixXd t = ws.dpost.transpose() * (x.array().colwise() * ws.resid.array()).matrix();
  g.first_weights = t.array().colwise() * (scale * p.second_weights.array());
  g.first_biases = (ws.dpost.transpose() * ws.resid).array() * (scale * p.second_weights.array());
  return g;
}

inline NetworkParams grad(const NetworkParams& p, const Dataset& ds) {
  EvalWorkspace ws;
  return grad(p, ds.inputs, ds.labels, ws);
}

// ---------------------------------------------------------------------------
// Symmetric neuron pairs: (w, b, u) and (-w, b, u) share the second-layer
// weight u, so the induced function u sigma(wx+b) + u sigma(-wx+b) + c is
// even in x.
// ---------------------------------------------------------------------------

struct SymmetricPair {
  Eigen::VectorXd w;
  double b = 0.0;
  double u = 0.0;
  double c = 0.0;
};

inline NetworkParams to_network(const SymmetricPair& pair, const Activation& act) {
  NetworkParams p = NetworkParams::zeros(act, 2, static_cast<int>(pair.w.size()));
  p.first_weights.row(0) = pair.w.transpose();
  p.first_weights.row(1) = -pair.w.transpose();
  p.first_biases.setConstant(pair.b);
  p.second_weights.setConstant(pair.u);
  p.output_bias = pair.c;
  return p;
}

struct PairTaylor {
  double c0 = 0.0;  // constant term 2 sigma(b) u + c
  double c2 = 0.0;  // u sigma''(b) w^2
  double c4 = 0.0;  // u sigma''''(b) w^4 / 12
};

// Even-function Taylor coefficients of the pair around x = 0 (odd orders
// cancel; the quartic term is the leading error after tuning c0 = 0, c2 = 1).
inline PairTaylor symmetric_pair_taylor(const SymmetricPair& pair, const Activation& act) {
  if (pair.w.size() != 1)
    throw std::invalid_argument("symmetric_pair_taylor: requires scalar input (d = 1)");
  const double w = pair.w[0];
  PairTaylor t;
  t.c0 = 2.0 * activation_eval(act, pair.b, 0) * pair.u + pair.c;
  t.c2 = pair.u * activation_eval(act, pair.b, 2) * w * w;
  t.c4 = pair.u * activation_eval(act, pair.b, 4) * w * w * w * w / 12.0;
  return t;
}

// Mirror-symmetry score of two neurons; 0 iff exactly mirrored ((w,b) vs
// (-w,b)). Scale-normalized so populations of different magnitude compare.
inline double symmetry_score(const Eigen::VectorXd& wi, double bi,
                             const Eigen::VectorXd& wj, double bj) {
  constexpr double eps_den = 1e-12;
  const double num = (wi + wj).norm() + std::abs(bi - bj);
  const double den = std::max(wi.norm(), wj.norm()) + std::max(std::abs(bi), std::abs(bj)) + eps_den;
  return num / den;
}

inline double symmetry_score(double wi, double bi, double wj, double bj) {
  Eigen::VectorXd a(1), b(1);
  a[0] = wi;
  b[0] = wj;
  return symmetry_score(a, bi, b, bj);
}

// ---------------------------------------------------------------------------
// Serialization: little-endian binary, stable layout
//   u32 magic 'LSNP' | u32 version=1 | u32 activation tag | f64 activation
//   param (LeakyReLU slope, else 0) | u32 d | u32 N |
//   f64[N*d] W row-major | f64[N] b | f64[N] v | f64 c
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t kParamsMagic = 0x4C534E50u;  // "LSNP"
inline constexpr std::uint32_t kParamsVersion = 1;

inline std::uint32_t activation_tag(const Activation& a) {
  switch (a.kind) {
    case ActivationKind::relu: return 0;
    case ActivationKind::leaky_relu: return 1;
    case ActivationKind::silu: return 2;
  }
  return 0xFFFFFFFFu;
}

inline Activation activation_from_tag(std::uint32_t tag, double param) {
  switch (tag) {
    case 0: return Activation::relu();
    case 1: return Activation::leaky_relu(param);
    case 2: return Activation::silu();
  }
  throw std::invalid_argument("activation_from_tag: unknown tag");
}

inline std::vector<std::uint8_t> serialize_params(const NetworkParams& p) {
  std::vector<std::uint8_t> buf;
  buf.reserve(28 + 8 * static_cast<std::size_t>(p.param_count()));
  auto put_u32 = [&buf](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF));
  };
  auto put_f64 = [&buf](double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    for (int i = 0; i < 8; ++i) buf.push_back(static_cast<std::uint8_t>((bits >> (8 * i)) & 0xFF));
  };
  put_u32(kParamsMagic);
  put_u32(kParamsVersion);
  put_u32(activation_tag(p.act));
  put_f64(p.act.kind == ActivationKind::leaky_relu ? p.act.slope : 0.0);
  put_u32(static_cast<std::uint32_t>(p.input_dim()));
  put_u32(static_cast<std::uint32_t>(p.width()));
  const Eigen::VectorXd flat = p.flatten();
  for (int k = 0; k < flat.size(); ++k) put_f64(flat[k]);
  return buf;
}

inline NetworkParams deserialize_params(const std::vector<std::uint8_t>& buf) {
  std::size_t pos = 0;
  auto get_u32 = [&buf, &pos]() {
    if (pos + 4 > buf.size()) throw std::invalid_argument("deserialize_params: truncated");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[pos++]) << (8 * i);
    return v;
  };
  auto get_f64 = [&buf, &pos]() {
    if (pos + 8 > buf.size()) throw std::invalid_argument("deserialize_params: truncated");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(buf[pos++]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  };
  if (get_u32() != kParamsMagic) throw std::invalid_argument("deserialize_params: bad magic");
  if (get_u32() != kParamsVersion) throw std::invalid_argument("deserialize_params: bad version");
  const std::uint32_t tag = get_u32();
  const double act_param = get_f64();
  const int d = static_cast<int>(get_u32());
  const int n = static_cast<int>(get_u32());
  const Activation act = activation_from_tag(tag, act_param);
  Eigen::VectorXd flat(static_cast<int>(n) * (d + 2) + 1);
  for (int k = 0; k < flat.size(); ++k) flat[k] = get_f64();
  return NetworkParams::unflatten(act, n, d, flat);
}

inline void write_params_file(const std::string& path, const NetworkParams& p) {
  const auto buf = serialize_params(p);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_params_file: cannot open " + path);
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
}

inline NetworkParams read_params_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_params_file: cannot open " + path);
  std::vector<std::uint8_t> buf((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  return deserialize_params(buf);
}

}  // namespace lotscale
