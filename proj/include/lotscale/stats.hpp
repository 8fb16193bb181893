#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "lotscale/rng.hpp"

namespace lotscale {

// ---------------------------------------------------------------------------
// Loss histograms in log10 space
// ---------------------------------------------------------------------------

struct LossHistogram {
  std::vector<double> edges;   // log10 bin edges, uniform spacing, size bins+1
  std::vector<long> counts;    // size bins
  long n_total = 0;
  long n_excluded = 0;         // non-finite or non-positive entries

  int bins() const { return static_cast<int>(counts.size()); }
  double center(int i) const { return 0.5 * (edges[i] + edges[i + 1]); }
};

inline LossHistogram build_histogram(const std::vector<double>& losses,
                                     int bins_per_decade = 8) {
  if (bins_per_decade < 1)
    throw std::invalid_argument("build_histogram: bins_per_decade must be >= 1");
  LossHistogram h;
  h.n_total = static_cast<long>(losses.size());
  std::vector<double> logs;
  logs.reserve(losses.size());
  for (double l : losses) {
    if (std::isfinite(l) && l > 0.0)
      logs.push_back(std::log10(l));
    else
      ++h.n_excluded;
  }
  if (logs.empty())
    throw std::invalid_argument("build_histogram: no finite positive losses");

  const auto [mn_it, mx_it] = std::minmax_element(logs.begin(), logs.end());
  const double lo = *mn_it, hi = *mx_it;
  const double width = 1.0 / bins_per_decade;
  int bins = std::max(1, static_cast<int>(std::ceil((hi - lo) / width - 1e-12)));
  double e0 = lo;
  if (hi == lo) {  // single distinct value: one bin centered on it
    bins = 1;
    e0 = lo - 0.5 * width;
  }
  h.edges.resize(bins + 1);
  for (int i = 0; i <= bins; ++i) h.edges[i] = e0 + i * width;
  h.counts.assign(bins, 0);
  for (double lg : logs) {
    int idx = static_cast<int>(std::floor((lg - e0) / width));
    idx = std::clamp(idx, 0, bins - 1);
    ++h.counts[idx];
  }
  return h;
}

// ---------------------------------------------------------------------------
// Peak detection on smoothed counts
// ---------------------------------------------------------------------------

struct Peak {
  double center_log10 = 0.0;
  double height = 0.0;      // smoothed height at the peak bin
  double prominence = 0.0;
};

struct PeakSet {
  std::vector<Peak> peaks;  // sorted by center ascending
};

namespace detail {
// Zero-padded 3-bin moving average (bins outside the histogram hold no
// counts, so the window always divides by 3).
inline std::vector<double> smooth3(const std::vector<long>& c) {
  const int n = static_cast<int>(c.size());
  std::vector<double> s(n);
  for (int i = 0; i < n; ++i) {
    const double a = i > 0 ? static_cast<double>(c[i - 1]) : 0.0;
    const double b = i + 1 < n ? static_cast<double>(c[i + 1]) : 0.0;
    s[i] = (a + static_cast<double>(c[i]) + b) / 3.0;
  }
  return s;
}
}  // namespace detail

// A peak is a strict local maximum of the smoothed counts; a plateau run of
// equal smoothed values counts as one peak when both run neighbours are
// strictly lower (histogram borders count as lower). Prominence: walk outward
// from the run on each side until a strictly higher smoothed value appears,
// tracking the minimum along the way; prominence is the peak height minus the
// higher of the two side minima. Peaks survive when their prominence reaches
// prominence_frac of the maximum raw count.
inline PeakSet detect_peaks(const LossHistogram& h, double prominence_frac = 0.05) {
  if (!(prominence_frac > 0.0 && prominence_frac <= 1.0))
    throw std::invalid_argument("detect_peaks: prominence_frac must be in (0, 1]");
  PeakSet out;
  const int n = h.bins();
  if (n == 0) return out;
  const std::vector<double> s = detail::smooth3(h.counts);
  const double max_count =
      static_cast<double>(*std::max_element(h.counts.begin(), h.counts.end()));
  const double threshold = prominence_frac * max_count;

  int i = 0;
  while (i < n) {
    int j = i;
    while (j + 1 < n && s[j + 1] == s[i]) ++j;  // plateau run [i, j]
    const bool lower_left = i == 0 || s[i - 1] < s[i];
    const bool lower_right = j == n - 1 || s[j + 1] < s[i];
    if (lower_left && lower_right) {
      double base = 0.0;
      if (i > 0) {
        double side_min = s[i - 1];
        for (int k = i - 1; k >= 0 && s[k] <= s[i]; --k) side_min = std::min(side_min, s[k]);
        base = std::max(base, side_min);
      }
      if (j < n - 1) {
        double side_min = s[j + 1];
        for (int k = j + 1; k < n && s[k] <= s[i]; ++k) side_min = std::min(side_min, s[k]);
        base = std::max(base, side_min);
      }
      const double prominence = s[i] - base;
      if (prominence >= threshold) {
        int rep = i;  // representative bin: largest raw count in the run, tie leftmost
        for (int k = i + 1; k <= j; ++k)
          if (h.counts[k] > h.counts[rep]) rep = k;
        out.peaks.push_back({h.center(rep), s[i], prominence});
      }
    }
    i = j + 1;
  }
  return out;
}

// Ratio of the second-highest peak prominence to the tallest peak's height;
// 0 with fewer than two peaks. 1 means two equally strong isolated modes.
inline double multimodality_score(const LossHistogram& h, double prominence_frac = 0.05) {
  const PeakSet ps = detect_peaks(h, prominence_frac);
  if (ps.peaks.size() < 2) return 0.0;
  double max_height = 0.0;
  for (const auto& p : ps.peaks) max_height = std::max(max_height, p.height);
  std::vector<double> proms;
  proms.reserve(ps.peaks.size());
  for (const auto& p : ps.peaks) proms.push_back(p.prominence);
  std::sort(proms.rbegin(), proms.rend());
  return max_height > 0.0 ? std::min(1.0, proms[1] / max_height) : 0.0;
}

// ---------------------------------------------------------------------------
// Medians and power-law fits
// ---------------------------------------------------------------------------

// Exact median of the finite entries (diverged runs carry +inf and drop out);
// mean of the middle two for even counts.
inline double median_loss(std::vector<double> losses) {
  losses.erase(std::remove_if(losses.begin(), losses.end(),
                              [](double l) { return !std::isfinite(l); }),
               losses.end());
  if (losses.empty())
    throw std::invalid_argument("median_loss: no finite losses");
  std::sort(losses.begin(), losses.end());
  const std::size_t n = losses.size();
  if (n % 2 == 1) return losses[n / 2];
  return 0.5 * (losses[n / 2 - 1] + losses[n / 2]);
}

struct ScalingFit {
  double exponent = 0.0;        // alpha in median ~ C * N^(-alpha)
  double log_prefactor = 0.0;   // log10 C
  double fit_r2 = 0.0;
};

// Least squares of log10(median) on log10(N); exponent = -slope.
inline ScalingFit fit_scaling(const std::vector<double>& widths,
                              const std::vector<double>& medians) {
  if (widths.size() != medians.size())
    throw std::invalid_argument("fit_scaling: size mismatch");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (!(widths[i] > 0.0)) throw std::invalid_argument("fit_scaling: non-positive width");
    if (!(medians[i] > 0.0) || !std::isfinite(medians[i]))
      throw std::invalid_argument("fit_scaling: non-positive median");
    xs.push_back(std::log10(widths[i]));
    ys.push_back(std::log10(medians[i]));
  }
  std::vector<double> distinct = xs;
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  if (distinct.size() < 3)
    throw std::invalid_argument("fit_scaling: need >= 3 distinct widths");

  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double slope = sxy / sxx;
  ScalingFit fit;
  fit.exponent = -slope;
  fit.log_prefactor = my - slope * mx;
  if (syy <= 0.0) {
    fit.fit_r2 = 1.0;  // constant medians: the flat fit is exact
  } else {
    double ss_res = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double pred = fit.log_prefactor + slope * xs[i];
      ss_res += (ys[i] - pred) * (ys[i] - pred);
    }
    fit.fit_r2 = std::clamp(1.0 - ss_res / syy, 0.0, 1.0);
  }
  return fit;
}

// ---------------------------------------------------------------------------
// Ensembling-vs-synergy bootstrap
// ---------------------------------------------------------------------------

// Synthetic width-N losses from width-N/2 losses: draw iid pairs with
// replacement and combine as (1/l_a + 1/l_b)^-1 (the pair harmonic mean
// divided by 2). Deterministic given the seed.
inline std::vector<double> synergy_bootstrap(const std::vector<double>& losses_half,
                                             int resamples, std::uint64_t seed) {
  if (resamples < 1) throw std::invalid_argument("synergy_bootstrap: resamples must be >= 1");
  std::vector<double> pool;
  for (double l : losses_half)
    if (std::isfinite(l)) pool.push_back(l);
  if (pool.size() < 2)
    throw std::invalid_argument("synergy_bootstrap: need >= 2 finite losses");
  for (double l : pool)
    if (l == 0.0)
      throw std::invalid_argument("synergy_bootstrap: zero loss makes the harmonic mean undefined");
  RandomStream rng(seed);
  std::vector<double> out(static_cast<std::size_t>(resamples));
  for (int i = 0; i < resamples; ++i) {
    const double a = pool[rng.below(pool.size())];
    const double b = pool[rng.below(pool.size())];
    out[static_cast<std::size_t>(i)] = 1.0 / (1.0 / a + 1.0 / b);
  }
  return out;
}

struct SynergyReport {
  int width = 0;
  std::vector<double> observed;
  std::vector<double> synthetic;
  double ks_stat = 0.0;
  double w1_log = 0.0;
};

// Two-sample Kolmogorov-Smirnov statistic on the raw values and 1-Wasserstein
// distance between the empirical distributions of log10 values.
inline std::pair<double, double> distribution_distance(std::vector<double> a,
                                                       std::vector<double> b) {
  if (a.empty() || b.empty())
    throw std::invalid_argument("distribution_distance: empty sample");
  for (double v : a)
    if (!(v > 0.0)) throw std::invalid_argument("distribution_distance: non-positive entry");
  for (double v : b)
    if (!(v > 0.0)) throw std::invalid_argument("distribution_distance: non-positive entry");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());

  double ks = 0.0;
  {
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
      const double t = std::min(a[i], b[j]);
      while (i < a.size() && a[i] <= t) ++i;
      while (j < b.size() && b[j] <= t) ++j;
      ks = std::max(ks, std::abs(i / na - j / nb));
    }
  }

  double w1 = 0.0;
  {
    std::size_t i = 0, j = 0;
    double prev = std::log10(std::min(a[0], b[0]));
    while (i < a.size() || j < b.size()) {
      const double ta = i < a.size() ? std::log10(a[i]) : std::numeric_limits<double>::infinity();
      const double tb = j < b.size() ? std::log10(b[j]) : std::numeric_limits<double>::infinity();
      const double t = std::min(ta, tb);
      w1 += std::abs(i / na - j / nb) * (t - prev);
      prev = t;
      while (i < a.size() && std::log10(a[i]) <= t) ++i;
      while (j < b.size() && std::log10(b[j]) <= t) ++j;
    }
  }
  return {ks, w1};
}

}  // namespace lotscale
