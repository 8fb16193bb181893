#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "lotscale/ensemble.hpp"
#include "lotscale/network.hpp"
#include "lotscale/targets.hpp"

namespace lotscale {

// ---------------------------------------------------------------------------
// Parameter-space analysis
// ---------------------------------------------------------------------------

struct ParamCloud {
  Eigen::MatrixXd networks;  // K x P flattened parameter vectors
  bool canonicalized = false;
};

inline ParamCloud make_cloud(const std::vector<NetworkParams>& nets, bool canonicalized = false) {
  if (nets.empty()) throw std::invalid_argument("make_cloud: empty population");
  ParamCloud cloud;
  cloud.canonicalized = canonicalized;
  const int p = nets.front().param_count();
  cloud.networks.resize(static_cast<int>(nets.size()), p);
  for (std::size_t k = 0; k < nets.size(); ++k) {
    if (nets[k].param_count() != p)
      throw std::invalid_argument("make_cloud: mixed parameter dimensions");
    cloud.networks.row(static_cast<int>(k)) = nets[k].flatten().transpose();
  }
  return cloud;
}

// Neurons sorted by descending first-layer weight (ties by ascending bias,
// then original index); the represented function is unchanged.
inline NetworkParams canonicalize(const NetworkParams& p) {
  if (p.input_dim() != 1)
    throw std::invalid_argument("canonicalize: requires scalar input");
  const int n = p.width();
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&p](int i, int j) {
    if (p.first_weights(i, 0) != p.first_weights(j, 0))
      return p.first_weights(i, 0) > p.first_weights(j, 0);
    return p.first_biases[i] < p.first_biases[j];
  });
  NetworkParams out = p;
  for (int i = 0; i < n; ++i) {
    out.first_weights.row(i) = p.first_weights.row(order[i]);
    out.first_biases[i] = p.first_biases[order[i]];
    out.second_weights[i] = p.second_weights[order[i]];
  }
  return out;
}

struct PcaResult {
  Eigen::MatrixXd directions;       // P x P, column k = component k
  Eigen::VectorXd explained;        // variances, non-increasing
  Eigen::MatrixXd projected;        // K x 2, first two components
  Eigen::RowVectorXd mean;          // P
};

// PCA via eigendecomposition of the sample covariance (divisor K-1). Sign
// convention: each direction's largest-magnitude entry is positive (first
// such entry on ties).
inline PcaResult pca(const ParamCloud& cloud) {
  const int k = static_cast<int>(cloud.networks.rows());
  const int p = static_cast<int>(cloud.networks.cols());
  if (k < 2) throw std::invalid_argument("pca: need at least 2 networks");

  PcaResult res;
  res.mean = cloud.networks.colwise().mean();
  Eigen::MatrixXd centered = cloud.networks.rowwise() - res.mean;
  Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(k - 1);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  res.directions.resize(p, p);
  res.explained.resize(p);
  for (int j = 0; j < p; ++j) {  // eigensolver orders ascending; flip
    res.explained[j] = std::max(0.0, es.eigenvalues()[p - 1 - j]);
    res.directions.col(j) = es.eigenvectors().col(p - 1 - j);
  }
  for (int j = 0; j < p; ++j) {
    int arg = 0;
    for (int i = 1; i < p; ++i)
      if (std::abs(res.directions(i, j)) > std::abs(res.directions(arg, j))) arg = i;
    if (res.directions(arg, j) < 0.0) res.directions.col(j) = -res.directions.col(j);
  }
  res.projected.resize(k, 2);
  res.projected.col(0) = centered * res.directions.col(0);
  res.projected.col(1) = p > 1 ? (centered * res.directions.col(1)).eval()
                               : Eigen::VectorXd::Zero(k);
  return res;
}

// Single-linkage connected components: points within link_threshold join one
// cluster. threshold <= 0 selects the default, 5% of the bounding-box
// diagonal. Labels are dense, ordered by first appearance.
inline std::vector<int> cluster(const Eigen::MatrixXd& points, double link_threshold = 0.0) {
  const int k = static_cast<int>(points.rows());
  if (k == 0) return {};
  double threshold = link_threshold;
  if (threshold <= 0.0) {
    Eigen::RowVectorXd lo = points.colwise().minCoeff();
    Eigen::RowVectorXd hi = points.colwise().maxCoeff();
    threshold = 0.05 * (hi - lo).norm();
    if (threshold <= 0.0) threshold = 1e-300;  // all points coincide
  }

  std::vector<int> parent(k);
  std::iota(parent.begin(), parent.end(), 0);
  std::function<int(int)> find = [&](int x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  };
  const double t2 = threshold * threshold;
  for (int i = 0; i < k; ++i)
    for (int j = i + 1; j < k; ++j)
      if ((points.row(i) - points.row(j)).squaredNorm() <= t2) {
        const int ri = find(i), rj = find(j);
        if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
      }
  std::vector<int> labels(k, -1);
  int next = 0;
  for (int i = 0; i < k; ++i) {
    const int r = find(i);
    if (labels[r] < 0) labels[r] = next++;
    labels[i] = labels[r];
  }
  return labels;
}

inline int cluster_count(const std::vector<int>& labels) {
  int mx = -1;
  for (int l : labels) mx = std::max(mx, l);
  return mx + 1;
}

// ---------------------------------------------------------------------------
// Activation traces and mirror statistics
// ---------------------------------------------------------------------------

struct NeuronTrace {
  Eigen::VectorXd pre;   // w x + b on the grid
  Eigen::VectorXd post;  // sigma(pre)
};

inline std::vector<NeuronTrace> activation_trace(const NetworkParams& p,
                                                 const Eigen::VectorXd& grid) {
  if (p.input_dim() != 1)
    throw std::invalid_argument("activation_trace: requires scalar input");
  std::vector<NeuronTrace> traces(static_cast<std::size_t>(p.width()));
  for (int i = 0; i < p.width(); ++i) {
    NeuronTrace& t = traces[static_cast<std::size_t>(i)];
    t.pre = p.first_weights(i, 0) * grid.array() + p.first_biases[i];
    t.post.resize(grid.size());
    for (int g = 0; g < grid.size(); ++g)
      t.post[g] = activation_eval(p.act, t.pre[g], 0);
  }
  return traces;
}

struct MirrorStats {
  double median_score = 0.0;
  std::vector<double> scores;  // per neuron: min score against all others
};

inline MirrorStats mirror_symmetry_stats(const NetworkParams& p) {
  if (p.input_dim() != 1)
    throw std::invalid_argument("mirror_symmetry_stats: requires scalar input");
  const int n = p.width();
  if (n < 2) throw std::invalid_argument("mirror_symmetry_stats: need >= 2 neurons");
  MirrorStats out;
  out.scores.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double best = std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      best = std::min(best, symmetry_score(p.first_weights(i, 0), p.first_biases[i],
                                           p.first_weights(j, 0), p.first_biases[j]));
    }
    out.scores[static_cast<std::size_t>(i)] = best;
  }
  std::vector<double> sorted = out.scores;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  out.median_score = m % 2 == 1 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  return out;
}

// ---------------------------------------------------------------------------
// Ticket pairing and quality
// ---------------------------------------------------------------------------

struct TicketPairing {
  std::vector<std::pair<int, int>> pairs;  // (i, j), i < j
  std::vector<double> scores;              // symmetry score per pair
  std::vector<int> unpaired;               // leftover index for odd widths
};

// Greedy minimum-cost matching on the symmetry score: repeatedly commit the
// globally lowest-score remaining pair; ties break on (i, j). Adequate for
// the widths here (validated against exhaustive matching in the tests).
inline TicketPairing pair_symmetric_neurons(const NetworkParams& p) {
  if (p.input_dim() != 1)
    throw std::invalid_argument("pair_symmetric_neurons: requires scalar input");
  const int n = p.width();
  TicketPairing out;
  if (n == 1) {
    out.unpaired.push_back(0);
    return out;
  }
  struct Cand {
    double score;
    int i, j;
  };
  std::vector<Cand> cands;
  cands.reserve(static_cast<std::size_t>(n) * (n - 1) / 2);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      cands.push_back({symmetry_score(p.first_weights(i, 0), p.first_biases[i],
                                      p.first_weights(j, 0), p.first_biases[j]),
                       i, j});
  std::sort(cands.begin(), cands.end(), [](const Cand& a, const Cand& b) {
    return std::tie(a.score, a.i, a.j) < std::tie(b.score, b.i, b.j);
  });
  std::vector<bool> used(static_cast<std::size_t>(n), false);
  for (const Cand& c : cands) {
    if (used[static_cast<std::size_t>(c.i)] || used[static_cast<std::size_t>(c.j)]) continue;
    used[static_cast<std::size_t>(c.i)] = used[static_cast<std::size_t>(c.j)] = true;
    out.pairs.emplace_back(c.i, c.j);
    out.scores.push_back(c.score);
  }
  for (int i = 0; i < n; ++i)
    if (!used[static_cast<std::size_t>(i)]) out.unpaired.push_back(i);
  return out;
}

// Ticket output on a grid: g(x) = v_i sigma(w_i x + b_i) + v_j sigma(w_j x + b_j).
inline Eigen::VectorXd ticket_output(const NetworkParams& p, std::pair<int, int> pair,
                                     const Eigen::VectorXd& grid) {
  Eigen::VectorXd g(grid.size());
  for (int m = 0; m < grid.size(); ++m) {
    double acc = 0.0;
    for (int idx : {pair.first, pair.second}) {
      const double pre = p.first_weights(idx, 0) * grid[m] + p.first_biases[idx];
      acc += p.second_weights[idx] * activation_eval(p.act, pre, 0);
    }
    g[m] = acc;
  }
  return g;
}

struct AffineFit {
  double alpha = 0.0;
  double beta = 0.0;
  double r2 = 0.0;
};

// Best affine predictor alpha*g + beta for the targets over the grid;
// r2 = 1 - SS_res/SS_tot. A (numerically) constant g degenerates to r2 = 0
// with the mean predictor.
inline AffineFit affine_fit(const Eigen::VectorXd& g, const Eigen::VectorXd& f) {
  if (g.size() != f.size() || g.size() < 2)
    throw std::invalid_argument("affine_fit: bad sizes");
  const double n = static_cast<double>(g.size());
  const double mg = g.mean(), mf = f.mean();
  const double var_g = (g.array() - mg).square().sum() / n;
  const double cov = ((g.array() - mg) * (f.array() - mf)).sum() / n;
  const double ss_tot = (f.array() - mf).square().sum();
  AffineFit fit;
  const double scale = g.array().abs().maxCoeff();
  if (var_g <= 1e-28 * scale * scale || var_g == 0.0) {
    fit.alpha = 0.0;
    fit.beta = mf;
    fit.r2 = 0.0;
    return fit;
  }
  fit.alpha = cov / var_g;
  fit.beta = mf - fit.alpha * mg;
  const double ss_res = (f.array() - (fit.alpha * g.array() + fit.beta)).square().sum();
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return fit;
}

inline double ticket_r2(const NetworkParams& p, std::pair<int, int> pair,
                        const Eigen::VectorXd& grid, const Eigen::VectorXd& targets) {
  return affine_fit(ticket_output(p, pair, grid), targets).r2;
}

// Error function of a ticket: calibrated prediction minus target on the grid.
inline Eigen::VectorXd ticket_error_function(const NetworkParams& p, std::pair<int, int> pair,
                                             const Eigen::VectorXd& grid,
                                             const Eigen::VectorXd& targets) {
  const Eigen::VectorXd g = ticket_output(p, pair, grid);
  const AffineFit fit = affine_fit(g, targets);
  return (fit.alpha * g.array() + fit.beta - targets.array()).matrix();
}

struct CorrelationResult {
  Eigen::MatrixXd matrix;        // among the kept tickets
  std::vector<int> kept;         // ticket indices with positive norm
  std::vector<int> excluded;     // zero-norm ticket indices
};

// Normalized inner products <e_i, e_j>/(|e_i||e_j|) under the quadrature.
inline CorrelationResult error_correlation_matrix(const Eigen::MatrixXd& errors,
                                                  const Eigen::VectorXd& weights) {
  if (errors.cols() != weights.size())
    throw std::invalid_argument("error_correlation_matrix: weight length mismatch");
  const int n = static_cast<int>(errors.rows());
  CorrelationResult out;
  std::vector<double> norms(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    norms[static_cast<std::size_t>(i)] =
        std::sqrt((errors.row(i).transpose().array().square() * weights.array()).sum());
    if (norms[static_cast<std::size_t>(i)] > 0.0)
      out.kept.push_back(i);
    else
      out.excluded.push_back(i);
  }
  const int m = static_cast<int>(out.kept.size());
  out.matrix.resize(m, m);
  for (int a = 0; a < m; ++a) {
    for (int b = a; b < m; ++b) {
      const int i = out.kept[static_cast<std::size_t>(a)];
      const int j = out.kept[static_cast<std::size_t>(b)];
      const double dot =
          (errors.row(i).transpose().array() * errors.row(j).transpose().array() *
           weights.array()).sum();
      const double c = dot / (norms[static_cast<std::size_t>(i)] * norms[static_cast<std::size_t>(j)]);
      out.matrix(a, b) = a == b ? 1.0 : std::clamp(c, -1.0, 1.0);
      out.matrix(b, a) = out.matrix(a, b);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Ticket report and distillation
// ---------------------------------------------------------------------------

struct TicketReport {
  TicketPairing pairing;
  std::vector<double> r2;            // per ticket
  Eigen::MatrixXd errors;            // tickets x grid points
  CorrelationResult correlation;
  int best_ticket = -1;              // argmax r2
};

inline TicketReport ticket_report(const NetworkParams& p, const Eigen::VectorXd& grid,
                                  const Eigen::VectorXd& targets,
                                  const Eigen::VectorXd& weights,
                                  double useless_r2_cut = 0.5) {
  TicketReport rep;
  rep.pairing = pair_symmetric_neurons(p);
  const int n = static_cast<int>(rep.pairing.pairs.size());
  if (n == 0) throw std::invalid_argument("ticket_report: no pairs (width < 2)");
  rep.errors.resize(n, grid.size());
  rep.r2.resize(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) {
    rep.r2[static_cast<std::size_t>(t)] = ticket_r2(p, rep.pairing.pairs[static_cast<std::size_t>(t)], grid, targets);
    rep.errors.row(t) =
        ticket_error_function(p, rep.pairing.pairs[static_cast<std::size_t>(t)], grid, targets).transpose();
    if (rep.best_ticket < 0 ||
        rep.r2[static_cast<std::size_t>(t)] > rep.r2[static_cast<std::size_t>(rep.best_ticket)])
      rep.best_ticket = t;
  }
  // low-quality tickets are excluded from the correlation analysis
  std::vector<int> good;
  for (int t = 0; t < n; ++t)
    if (rep.r2[static_cast<std::size_t>(t)] >= useless_r2_cut) good.push_back(t);
  if (good.empty()) good.push_back(rep.best_ticket);
  Eigen::MatrixXd good_errors(static_cast<int>(good.size()), grid.size());
  for (std::size_t a = 0; a < good.size(); ++a)
    good_errors.row(static_cast<int>(a)) = rep.errors.row(good[a]);
  rep.correlation = error_correlation_matrix(good_errors, weights);
  for (int& idx : rep.correlation.kept) idx = good[static_cast<std::size_t>(idx)];
  for (int& idx : rep.correlation.excluded) idx = good[static_cast<std::size_t>(idx)];
  return rep;
}

struct DistillResult {
  NetworkParams distilled;     // width 2, first layer copied from the ticket
  double distilled_loss = 0.0; // evaluation-grid MSE
  int source_ticket = -1;
  double best_r2 = 0.0;
  bool ill_conditioned = false;
  double condition = 0.0;
};

// Copies the highest-r2 ticket's neurons into a width-2 net and refits the
// second layer (v1, v2, c) by ridge least squares (1e-12) on the training
// grid; the loss is evaluated on the evaluation grid.
inline DistillResult distill(const NetworkParams& wide, const Dataset& train_ds,
                             const Dataset& eval_ds) {
  if (wide.input_dim() != 1)
    throw std::invalid_argument("distill: requires scalar input");
  const Eigen::VectorXd eval_grid = eval_ds.inputs.col(0);
  const Eigen::VectorXd eval_weights = quadrature_weights(eval_ds);
  TicketReport rep = ticket_report(wide, eval_grid, eval_ds.labels, eval_weights);

  const auto [i, j] = rep.pairing.pairs[static_cast<std::size_t>(rep.best_ticket)];
  DistillResult out;
  out.source_ticket = rep.best_ticket;
  out.best_r2 = rep.r2[static_cast<std::size_t>(rep.best_ticket)];
  out.distilled = NetworkParams::zeros(wide.act, 2, 1);
  out.distilled.first_weights(0, 0) = wide.first_weights(i, 0);
  out.distilled.first_weights(1, 0) = wide.first_weights(j, 0);
  out.distilled.first_biases[0] = wide.first_biases[i];
  out.distilled.first_biases[1] = wide.first_biases[j];

  // features: sigma of each copied neuron plus the constant column
  const int m = train_ds.size();
  Eigen::MatrixXd phi(m, 3);
  for (int r = 0; r < m; ++r) {
    const double x = train_ds.inputs(r, 0);
    phi(r, 0) = activation_eval(wide.act, out.distilled.first_weights(0, 0) * x +
                                              out.distilled.first_biases[0], 0);
    phi(r, 1) = activation_eval(wide.act, out.distilled.first_weights(1, 0) * x +
                                              out.distilled.first_biases[1], 0);
    phi(r, 2) = 1.0;
  }
  constexpr double kRidge = 1e-12;
  Eigen::MatrixXd gram = phi.transpose() * phi + kRidge * Eigen::MatrixXd::Identity(3, 3);
  Eigen::VectorXd rhs = phi.transpose() * train_ds.labels;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
  out.condition = es.eigenvalues()[2] / std::max(es.eigenvalues()[0], 1e-300);
  out.ill_conditioned = out.condition > 1e12;
  Eigen::VectorXd coef = es.eigenvectors() *
                         (es.eigenvectors().transpose() * rhs).cwiseQuotient(
                             es.eigenvalues().cwiseMax(1e-300));
  out.distilled.second_weights[0] = coef[0];
  out.distilled.second_weights[1] = coef[1];
  out.distilled.output_bias = coef[2];
  out.distilled_loss = mse_loss(out.distilled, eval_ds);
  return out;
}

}  // namespace lotscale
