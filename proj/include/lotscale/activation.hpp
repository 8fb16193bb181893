#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

namespace lotscale {

enum class ActivationKind { relu, leaky_relu, silu };

// Activation function sigma. LeakyReLU carries its negative-side slope; the
// other kinds ignore `slope`.
struct Activation {
  ActivationKind kind = ActivationKind::silu;
  double slope = 0.01;

  static Activation relu() { return {ActivationKind::relu, 0.0}; }
  static Activation leaky_relu(double slope = 0.01) {
    if (!(slope > 0.0 && slope < 1.0))
      throw std::invalid_argument("leaky_relu slope must lie in (0, 1), got " +
                                  std::to_string(slope));
    return {ActivationKind::leaky_relu, slope};
  }
  static Activation silu() { return {ActivationKind::silu, 0.0}; }

  const char* name() const {
    switch (kind) {
      case ActivationKind::relu: return "relu";
      case ActivationKind::leaky_relu: return "leakyrelu";
      case ActivationKind::silu: return "silu";
    }
    return "?";
  }
};

namespace detail {

// Derivatives of the logistic s(x) as polynomials in s, from the recurrence
// s' = s(1-s):
//   s'    = u,               u = s(1-s)
//   s''   = u(1-2s)
//   s'''  = u(1-6s+6s^2)
//   s'''' = u(1-2s)(1-12s+12s^2)
inline double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

inline double logistic_deriv(double x, int order) {
  const double s = logistic(x);
  const double u = s * (1.0 - s);
  switch (order) {
    case 0: return s;
    case 1: return u;
    case 2: return u * (1.0 - 2.0 * s);
    case 3: return u * (1.0 - 6.0 * s + 6.0 * s * s);
    case 4: return u * (1.0 - 2.0 * s) * (1.0 - 12.0 * s + 12.0 * s * s);
    default: throw std::invalid_argument("logistic_deriv: unsupported order");
  }
}

}  // namespace detail

// Order-th derivative of sigma at x, orders 0..4.
//
// SiLU(x) = x*s(x); by Leibniz, silu^(k) = x*s^(k) + k*s^(k-1), with the
// logistic derivatives above in closed form (never finite-differenced).
// ReLU/LeakyReLU kink convention: first derivative at exactly 0 takes the
// negative-side slope (0 for ReLU); orders >= 2 are 0 everywhere, the
// distributional spike at the kink is ignored.
inline double activation_eval(const Activation& act, double x, int order) {
  if (order < 0 || order > 4)
    throw std::invalid_argument("activation_eval: order must be in 0..4, got " +
                                std::to_string(order));
  switch (act.kind) {
    case ActivationKind::relu:
    case ActivationKind::leaky_relu: {
      const double slope = act.kind == ActivationKind::relu ? 0.0 : act.slope;
      if (order == 0) return x > 0.0 ? x : slope * x;
      if (order == 1) return x > 0.0 ? 1.0 : slope;
      return 0.0;
    }
    case ActivationKind::silu: {
      if (order == 0) return x * detail::logistic(x);
      return x * detail::logistic_deriv(x, order) +
             order * detail::logistic_deriv(x, order - 1);
    }
  }
  throw std::invalid_argument("activation_eval: unknown activation kind");
}

// Constants of the quadratic expansion around the SiLU minimum:
// sigma(x) ~ A (x - x*)^2 + B near x = x*.
struct SiluConstants {
  double x_star = 0.0;          // argmin of SiLU (negative)
  double curvature_half = 0.0;  // A = sigma''(x*)/2
  double min_value = 0.0;       // B = sigma(x*)
};

// Locates the SiLU minimum by golden-section search on [-6, 0] followed by
// Newton polishing on sigma' (the bracket is unimodal: sigma decreases from
// its left tail to the single interior minimum and rises to sigma(0)=0).
inline SiluConstants silu_min_constants() {
  const Activation act = Activation::silu();
  auto f = [&](double x) { return activation_eval(act, x, 0); };
  double a = -6.0, b = 0.0;
  const double invphi = 0.6180339887498949;
  double c = b - invphi * (b - a);
  double d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > 1e-8) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  double x = 0.5 * (a + b);
  for (int it = 0; it < 8; ++it) {
    const double g1 = activation_eval(act, x, 1);
    const double g2 = activation_eval(act, x, 2);
    const double step = g1 / g2;
    x -= step;
    if (std::abs(step) < 1e-15) break;
  }
  SiluConstants out;
  out.x_star = x;
  out.curvature_half = 0.5 * activation_eval(act, x, 2);
  out.min_value = activation_eval(act, x, 0);
  return out;
}

}  // namespace lotscale
