#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lotscale/errors.hpp"
#include "lotscale/rng.hpp"
#include "lotscale/stats.hpp"

namespace lotscale {

// ---------------------------------------------------------------------------
// Ticket error profiles: norms |e_i|^2, Gram structure, optional samples
// ---------------------------------------------------------------------------

struct ErrorProfile {
  int n = 0;
  Eigen::VectorXd norms_sq;                  // |e_i|^2
  std::optional<Eigen::MatrixXd> gram;       // <e_i, e_j>
  std::optional<Eigen::MatrixXd> sampled_errors;  // n x G, rows e_i on the grid
  Eigen::VectorXd quad_weights;              // G quadrature weights
  std::optional<Eigen::VectorXd> target_samples;  // f on the same grid

  // Builds norms and Gram from samples under the quadrature inner product
  // <a, b> = sum_g w_g a_g b_g.
  static ErrorProfile from_samples(const Eigen::MatrixXd& errors,
                                   const Eigen::VectorXd& weights) {
    if (errors.rows() < 1) throw std::invalid_argument("ErrorProfile: no tickets");
    if (errors.cols() != weights.size())
      throw std::invalid_argument("ErrorProfile: sample/weight length mismatch");
    ErrorProfile p;
    p.n = static_cast<int>(errors.rows());
    p.sampled_errors = errors;
    p.quad_weights = weights;
    Eigen::MatrixXd weighted = errors.array().rowwise() * weights.transpose().array();
    p.gram = weighted * errors.transpose();
    p.norms_sq = p.gram->diagonal();
    return p;
  }

  void validate() const {
    if (n < 1 || norms_sq.size() != n)
      throw std::invalid_argument("ErrorProfile: inconsistent size");
    if (gram) {
      if (gram->rows() != n || gram->cols() != n)
        throw std::invalid_argument("ErrorProfile: gram size mismatch");
      for (int i = 0; i < n; ++i) {
        const double d = (*gram)(i, i);
        const double scale = std::max(std::abs(d), std::abs(norms_sq[i]));
        if (scale > 0 && std::abs(d - norms_sq[i]) > 1e-9 * scale)
          throw std::invalid_argument("ErrorProfile: gram diagonal disagrees with norms");
      }
    }
  }
};

struct EnsembleWeights {
  Eigen::VectorXd a;          // sums to 1
  double achieved_loss = 0.0; // |sum_i a_i e_i|^2
};

// Closed-form optimal weights under orthogonal errors: a_i proportional to
// 1/|e_i|^2, achieving the harmonic-style bound.
inline EnsembleWeights optimal_weights(const Eigen::VectorXd& norms_sq) {
  if (norms_sq.size() < 1) throw std::invalid_argument("optimal_weights: empty");
  for (int i = 0; i < norms_sq.size(); ++i)
    if (!(norms_sq[i] > 0.0))
      throw std::invalid_argument("optimal_weights: norms must be positive");
  EnsembleWeights w;
  Eigen::VectorXd inv = norms_sq.cwiseInverse();
  const double total = inv.sum();
  w.a = inv / total;
  w.achieved_loss = 1.0 / total;
  return w;
}

// Lower bound |e_E|^2 >= (sum_i 1/|e_i|^2)^-1 on the ensembled error.
inline double ensemble_error_bound(const Eigen::VectorXd& norms_sq) {
  return optimal_weights(norms_sq).achieved_loss;
}

// Exact constrained minimizer of the ensembled error without orthogonality
// assumptions. Under the sum-to-one constraint the target terms of the
// objective |(sum a - 1) f + sum a_i e_i|^2 vanish identically, leaving
// min a' G a s.t. 1'a = 1, solved as a KKT system with ridge 1e-12 on G.
// target_norm_sq only feeds the conditioning diagnostic. The achieved loss is
// evaluated from the sampled residual, not from the regularized system.
inline EnsembleWeights ensemble_solve(const ErrorProfile& profile,
                                      double target_norm_sq = 0.0) {
  profile.validate();
  if (!profile.sampled_errors)
    throw std::invalid_argument("ensemble_solve: profile lacks sampled errors");
  const Eigen::MatrixXd& e = *profile.sampled_errors;
  const int n = profile.n;
  if (!profile.gram) throw std::invalid_argument("ensemble_solve: profile lacks gram");
  const Eigen::MatrixXd& g = *profile.gram;

  constexpr double kRidge = 1e-12;
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + 1, n + 1);
  kkt.topLeftCorner(n, n) = g + kRidge * Eigen::MatrixXd::Identity(n, n);
  kkt.block(0, n, n, 1).setOnes();
  kkt.block(n, 0, 1, n).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
  rhs[n] = 1.0;

  Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
  if (!lu.isInvertible()) {
    const double scale = std::max(std::abs(target_norm_sq), g.cwiseAbs().maxCoeff());
    throw NumericalError(
        "ensemble_solve: singular system after ridge regularization (matrix scale " +
        std::to_string(scale) + ", rank " + std::to_string(lu.rank()) + " of " +
        std::to_string(n + 1) + ")");
  }
  Eigen::VectorXd sol = lu.solve(rhs);

  EnsembleWeights w;
  w.a = sol.head(n);
  // renormalize the constraint residual away (it is solver-noise sized)
  w.a /= w.a.sum();
  Eigen::VectorXd resid = e.transpose() * w.a;
  w.achieved_loss = (resid.array().square() * profile.quad_weights.array()).sum();
  return w;
}

// Modified Gram-Schmidt with drop tolerance: basis vectors whose residual
// norm falls below 1e-8 of their original norm are discarded. The retained
// count is the number of independent tickets.
struct OrthogonalBasis {
  Eigen::MatrixXd basis;  // k x G, orthogonal rows (quadrature inner product)
  int effective_count = 0;
};

inline OrthogonalBasis orthogonalize(const ErrorProfile& profile) {
  if (!profile.sampled_errors)
    throw std::invalid_argument("orthogonalize: profile lacks sampled errors");
  const Eigen::MatrixXd& e = *profile.sampled_errors;
  const Eigen::VectorXd& w = profile.quad_weights;
  constexpr double kDropTol = 1e-8;

  auto dot = [&w](const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return (a.array() * b.array() * w.array()).sum();
  };

  std::vector<Eigen::VectorXd> kept;
  for (int i = 0; i < e.rows(); ++i) {
    Eigen::VectorXd r = e.row(i).transpose();
    const double orig = std::sqrt(std::max(0.0, dot(r, r)));
    for (const auto& q : kept) r -= (dot(r, q) / dot(q, q)) * q;
    // second pass for numerical orthogonality
    for (const auto& q : kept) r -= (dot(r, q) / dot(q, q)) * q;
    const double rnorm = std::sqrt(std::max(0.0, dot(r, r)));
    if (orig > 0.0 && rnorm >= kDropTol * orig) kept.push_back(r);
  }

  OrthogonalBasis out;
  out.effective_count = static_cast<int>(kept.size());
  out.basis.resize(out.effective_count, e.cols());
  for (int i = 0; i < out.effective_count; ++i) out.basis.row(i) = kept[i].transpose();
  return out;
}

// ---------------------------------------------------------------------------
// Correlated-error scaling simulator: loss ~ n^-beta
// ---------------------------------------------------------------------------

enum class GramKind { independent, equicorrelated, anti_paired, custom };

struct GramSpec {
  GramKind kind = GramKind::independent;
  double rho = 0.0;             // equicorrelated only
  Eigen::MatrixXd custom;       // custom only; leading principal blocks are used

  static GramSpec independent() { return {GramKind::independent, 0.0, {}}; }
  static GramSpec equicorrelated(double rho) {
    if (!(rho >= 0.0 && rho < 1.0))
      throw std::invalid_argument("equicorrelated: rho must lie in [0, 1)");
    return {GramKind::equicorrelated, rho, {}};
  }
  static GramSpec anti_paired() { return {GramKind::anti_paired, 0.0, {}}; }
  static GramSpec custom_matrix(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols() || m.rows() < 1)
      throw std::invalid_argument("custom gram: matrix must be square");
    return {GramKind::custom, 0.0, m};
  }
};

enum class BetaRegime { bosonic, independent, fermionic };

inline const char* beta_regime_name(BetaRegime r) {
  switch (r) {
    case BetaRegime::bosonic: return "bosonic";
    case BetaRegime::independent: return "independent";
    case BetaRegime::fermionic: return "fermionic";
  }
  return "?";
}

struct BetaFit {
  std::vector<int> n_values;
  std::vector<double> losses;   // mean achieved loss per n
  double beta = 0.0;
  BetaRegime regime = BetaRegime::independent;
  bool cancellation = false;    // losses below 1e-20: beta effectively infinite
};

// Regime bands: independent within [0.9, 1.1]; below bosonic, above fermionic.
inline BetaRegime classify_beta(double beta) {
  if (beta < 0.9) return BetaRegime::bosonic;
  if (beta > 1.1) return BetaRegime::fermionic;
  return BetaRegime::independent;
}

namespace detail {

inline Eigen::MatrixXd gram_for(const GramSpec& spec, int n) {
  switch (spec.kind) {
    case GramKind::independent:
      return Eigen::MatrixXd::Identity(n, n);
    case GramKind::equicorrelated: {
      Eigen::MatrixXd g = Eigen::MatrixXd::Constant(n, n, spec.rho);
      g.diagonal().setOnes();
      return g;
    }
    case GramKind::anti_paired: {
      Eigen::MatrixXd g = Eigen::MatrixXd::Identity(n, n);
      for (int i = 0; i + 1 < n; i += 2) {
        g(i, i + 1) = -1.0;
        g(i + 1, i) = -1.0;
      }
      return g;
    }
    case GramKind::custom: {
      if (spec.custom.rows() < n)
        throw std::invalid_argument("custom gram: matrix smaller than requested n");
      return spec.custom.topLeftCorner(n, n);
    }
  }
  throw std::invalid_argument("gram_for: unknown spec");
}

// Square root factor L with G = L L' via symmetric eigendecomposition
// (handles the singular anti-paired structure that Cholesky rejects).
inline Eigen::MatrixXd gram_sqrt(const Eigen::MatrixXd& g) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(g);
  const Eigen::VectorXd& ev = es.eigenvalues();
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
  if (ev.minCoeff() < -1e-9 * scale)
    throw std::invalid_argument("gram matrix is not positive semidefinite");
  Eigen::VectorXd root = ev.cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

// Random orthonormal frame: n orthonormal rows in R^dim, from the thin QR of
// a Gaussian matrix.
inline Eigen::MatrixXd random_orthonormal_rows(int n, int dim, RandomStream& rng) {
  Eigen::MatrixXd gauss(dim, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < dim; ++i) gauss(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, n);
  return q.transpose();
}

}  // namespace detail

// For each n, draws `trials` sets of error vectors in R^512 carrying exactly
// the prescribed Gram (unit norms): E = sqrt(G) U with U a random orthonormal
// frame, so <e_i, e_j> = G_ij up to roundoff. Each set is ensembled optimally
// and the mean loss per n feeds the power-law fit.
inline BetaFit simulate_beta(const std::vector<int>& n_list, const GramSpec& spec,
                             int trials, std::uint64_t seed) {
  if (n_list.size() < 3) throw std::invalid_argument("simulate_beta: need >= 3 n values");
  if (trials < 1) throw std::invalid_argument("simulate_beta: trials must be >= 1");
  constexpr int kDim = 512;
  constexpr double kCancelled = 1e-20;

  BetaFit fit;
  fit.n_values = n_list;
  std::uint64_t trial_counter = 0;
  for (int n : n_list) {
    if (n < 1 || n > kDim) throw std::invalid_argument("simulate_beta: n out of range");
    const Eigen::MatrixXd g = detail::gram_for(spec, n);
    const Eigen::MatrixXd root = detail::gram_sqrt(g);
    double acc = 0.0;
    for (int t = 0; t < trials; ++t) {
      RandomStream rng = RandomStream::substream(seed, trial_counter++);
      Eigen::MatrixXd frame = detail::random_orthonormal_rows(n, kDim, rng);
      Eigen::MatrixXd errors = root * frame;
      ErrorProfile profile =
          ErrorProfile::from_samples(errors, Eigen::VectorXd::Ones(kDim));
      acc += ensemble_solve(profile).achieved_loss;
    }
    fit.losses.push_back(acc / trials);
  }

  bool all_cancelled = true;
  for (double l : fit.losses) all_cancelled &= l < kCancelled;
  if (all_cancelled) {
    fit.cancellation = true;
    fit.beta = std::numeric_limits<double>::infinity();
    fit.regime = BetaRegime::fermionic;
    return fit;
  }

  std::vector<double> ns(n_list.begin(), n_list.end());
  std::vector<double> clipped = fit.losses;
  for (double& l : clipped) l = std::max(l, 1e-300);
  const ScalingFit sf = fit_scaling(ns, clipped);
  fit.beta = sf.exponent;
  fit.regime = classify_beta(fit.beta);
  return fit;
}

// Approximation-theory exponent for well-trained piecewise-linear fits:
// MSE ~ N^(-4/d) on a d-dimensional domain.
inline double approximation_exponent(int d) {
  if (d < 1) throw std::invalid_argument("approximation_exponent: d must be >= 1");
  return 4.0 / static_cast<double>(d);
}

// Width exponent to parameter-count exponent under a fixed depth-width ratio:
// parameters ~ width^3, so alpha_N = alpha_width / 3.
inline double llm_projection(double alpha_width) {
  return alpha_width / 3.0;
}

}  // namespace lotscale
