#pragma once

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "lotscale/network.hpp"
#include "lotscale/rng.hpp"
#include "lotscale/targets.hpp"

namespace lotscale {

enum class InitScheme { uniform_fanin };

// Full-batch Adam training configuration. Defaults give the standard recipe:
// 50000 steps, lr 1e-2 decayed x0.2 every 10000 steps, dense fixed datasets.
struct TrainConfig {
  Activation activation = Activation::silu();
  int width = 2;
  std::string target_id = "x2";
  double domain_lo = -2.0;
  double domain_hi = 2.0;
  int train_size = 0;                 // 0 -> 301 (d=1 grid) / 3000 (d>1 iid)
  int eval_size = 0;                  // 0 -> 1001 (d=1 grid) / 20000 (d>1 iid)
  std::uint64_t eval_seed = 0;        // evaluation set is shared across runs
  int steps = 50000;
  double lr0 = 1e-2;
  double lr_decay_factor = 0.2;
  int lr_decay_every = 10000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  InitScheme init = InitScheme::uniform_fanin;
  std::uint64_t seed = 0;             // per-run seed (already mixed for sweeps)
  int trace_every = 500;

  void validate() const {
    if (width < 1) throw std::invalid_argument("TrainConfig: width must be >= 1");
    if (steps < 1) throw std::invalid_argument("TrainConfig: steps must be >= 1");
    if (!(lr0 > 0.0)) throw std::invalid_argument("TrainConfig: lr0 must be > 0");
    if (!(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0))
      throw std::invalid_argument("TrainConfig: lr_decay_factor must be in (0, 1]");
    if (lr_decay_every < 1)
      throw std::invalid_argument("TrainConfig: lr_decay_every must be >= 1");
    if (!(domain_lo < domain_hi))
      throw std::invalid_argument("TrainConfig: domain requires lo < hi");
    if (trace_every < 1)
      throw std::invalid_argument("TrainConfig: trace_every must be >= 1");
    find_target(target_id);
  }

  int resolved_train_size(int arity) const {
    return train_size > 0 ? train_size : (arity == 1 ? 301 : 3000);
  }
  int resolved_eval_size(int arity) const {
    return eval_size > 0 ? eval_size : (arity == 1 ? 1001 : 20000);
  }
};

inline double lr_schedule(const TrainConfig& cfg, int step) {
  if (step < 0 || step >= cfg.steps)
    throw std::invalid_argument("lr_schedule: step out of range");
  double lr = cfg.lr0;
  for (int k = step / cfg.lr_decay_every; k > 0; --k) lr *= cfg.lr_decay_factor;
  return lr;
}

// ---------------------------------------------------------------------------
// Adam with bias correction, over parameter-shaped moment state.
// ---------------------------------------------------------------------------

struct AdamState {
  NetworkParams m;
  NetworkParams v;
  long t = 0;

  static AdamState zeros(const NetworkParams& like) {
    AdamState s;
    s.m = NetworkParams::zeros(like.act, like.width(), like.input_dim());
    s.v = NetworkParams::zeros(like.act, like.width(), like.input_dim());
    s.t = 0;
    return s;
  }
};

inline void adam_step(NetworkParams& params, AdamState& state, const NetworkParams& g,
                      double lr, double beta1 = 0.9, double beta2 = 0.999,
                      double eps = 1e-8) {
  state.t += 1;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  // array() wrappers are views; taking them by value still writes through.
  auto upd = [&](auto p, auto m, auto v, const auto& grad_block) {
    m = beta1 * m + (1.0 - beta1) * grad_block;
    v = beta2 * v + (1.0 - beta2) * grad_block.square();
    p -= lr * (m / bc1) / ((v / bc2).sqrt() + eps);
  };
  upd(params.first_weights.array(), state.m.first_weights.array(),
      state.v.first_weights.array(), g.first_weights.array());
  upd(params.first_biases.array(), state.m.first_biases.array(),
      state.v.first_biases.array(), g.first_biases.array());
  upd(params.second_weights.array(), state.m.second_weights.array(),
      state.v.second_weights.array(), g.second_weights.array());
  // scalar c
  {
    double& p = params.output_bias;
    double& m = state.m.output_bias;
    double& v = state.v.output_bias;
    const double grad_c = g.output_bias;
    m = beta1 * m + (1.0 - beta1) * grad_c;
    v = beta2 * v + (1.0 - beta2) * grad_c * grad_c;
    p -= lr * (m / bc1) / (std::sqrt(v / bc2) + eps);
  }
}

// ---------------------------------------------------------------------------
// Single runs and sweeps
// ---------------------------------------------------------------------------

struct RunRecord {
  std::string config_digest;
  int width = 0;
  int seed_index = 0;
  std::uint64_t run_seed = 0;
  bool diverged = false;
  double final_loss = std::numeric_limits<double>::infinity();  // evaluation-set MSE
  std::vector<std::pair<int, double>> loss_trace;               // (step, training loss)
  NetworkParams final_params;
  double wall_seconds = 0.0;  // excluded from determinism guarantees
};

// Digest of everything that shapes a run except the seed, so all runs of one
// sweep share it. FNV-1a over a canonical field dump.
inline std::string train_config_digest(const TrainConfig& cfg) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "act=%s slope=%.17g target=%s lo=%.17g hi=%.17g train=%d eval=%d "
                "evseed=%llu steps=%d lr0=%.17g decay=%.17g every=%d b1=%.17g "
                "b2=%.17g eps=%.17g init=%d trace=%d",
                cfg.activation.name(), cfg.activation.slope, cfg.target_id.c_str(),
                cfg.domain_lo, cfg.domain_hi, cfg.train_size, cfg.eval_size,
                static_cast<unsigned long long>(cfg.eval_seed), cfg.steps, cfg.lr0,
                cfg.lr_decay_factor, cfg.lr_decay_every, cfg.adam_beta1, cfg.adam_beta2,
                cfg.adam_eps, static_cast<int>(cfg.init), cfg.trace_every);
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char* c = buf; *c; ++c) {
    h ^= static_cast<std::uint8_t>(*c);
    h *= 0x100000001b3ull;
  }
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

// Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) per layer; draw order W row-major,
// b, v, c, so initialization is a pure function of the run seed.
inline NetworkParams init_params(const TrainConfig& cfg, int arity, RandomStream& rng) {
  NetworkParams p = NetworkParams::zeros(cfg.activation, cfg.width, arity);
  const double bound1 = 1.0 / std::sqrt(static_cast<double>(arity));
  const double bound2 = 1.0 / std::sqrt(static_cast<double>(cfg.width));
  for (int i = 0; i < cfg.width; ++i)
    for (int j = 0; j < arity; ++j) p.first_weights(i, j) = rng.uniform(-bound1, bound1);
  for (int i = 0; i < cfg.width; ++i) p.first_biases[i] = rng.uniform(-bound1, bound1);
  for (int i = 0; i < cfg.width; ++i) p.second_weights[i] = rng.uniform(-bound2, bound2);
  p.output_bias = rng.uniform(-bound2, bound2);
  return p;
}

inline Dataset training_set(const TrainConfig& cfg) {
  const TargetFunction& t = find_target(cfg.target_id);
  const Box box = Box::cube(cfg.domain_lo, cfg.domain_hi, t.arity);
  if (t.arity == 1)
    return sample_dataset(t, box, cfg.resolved_train_size(1), SamplingMode::uniform_grid, 0);
  // iid training data gets its own deterministic substream of the run seed
  return sample_dataset(t, box, cfg.resolved_train_size(t.arity), SamplingMode::iid_uniform,
                        mix_seed(cfg.seed, 0xDA7Aull, 0));
}

inline Dataset evaluation_set(const TrainConfig& cfg) {
  const TargetFunction& t = find_target(cfg.target_id);
  const Box box = Box::cube(cfg.domain_lo, cfg.domain_hi, t.arity);
  if (t.arity == 1)
    return sample_dataset(t, box, cfg.resolved_eval_size(1), SamplingMode::uniform_grid, 0);
  return sample_dataset(t, box, cfg.resolved_eval_size(t.arity), SamplingMode::iid_uniform,
                        cfg.eval_seed);
}

// Trains one network. Deterministic given the config (wall_seconds aside);
// divergence (non-finite loss or parameters) flags the record and records a
// +inf final loss instead of aborting.
inline RunRecord train(const TrainConfig& cfg) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();

  const Dataset train_ds = training_set(cfg);
  const Dataset eval_ds = evaluation_set(cfg);

  RandomStream rng(cfg.seed);
  NetworkParams params = init_params(cfg, train_ds.dim(), rng);
  AdamState adam = AdamState::zeros(params);

  RunRecord rec;
  rec.config_digest = train_config_digest(cfg);
  rec.width = cfg.width;
  rec.run_seed = cfg.seed;

  EvalWorkspace ws;
  bool diverged = false;
  for (int step = 0; step < cfg.steps; ++step) {
    double loss = 0.0;
    NetworkParams g = grad(params, train_ds.inputs, train_ds.labels, ws, &loss);
    if (!std::isfinite(loss) || !g.all_finite()) {
      diverged = true;
      break;
    }
    if (step % cfg.trace_every == 0) rec.loss_trace.emplace_back(step, loss);
    adam_step(params, adam, g, lr_schedule(cfg, step), cfg.adam_beta1, cfg.adam_beta2,
              cfg.adam_eps);
    if (!params.all_finite()) {
      diverged = true;
      break;
    }
  }

  rec.final_params = params;
  if (!diverged) {
    const double eval_loss = mse_loss(params, eval_ds);
    if (std::isfinite(eval_loss)) {
      rec.final_loss = eval_loss;
    } else {
      diverged = true;
    }
  }
  rec.diverged = diverged;
  if (diverged) rec.final_loss = std::numeric_limits<double>::infinity();
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return rec;
}

struct SweepConfig {
  TrainConfig base;        // base.seed acts as the sweep's seed_base
  std::vector<int> widths;
  int seeds_per_width = 1;
};

struct SweepResult {
  std::map<int, std::vector<RunRecord>> by_width;
};

// Per-run seed: mix_seed(seed_base, width, seed_index). Independent of
// execution order, so any worker count yields identical results.
inline TrainConfig run_config(const TrainConfig& base, int width, int seed_index) {
  TrainConfig cfg = base;
  cfg.width = width;
  cfg.seed = mix_seed(base.seed, static_cast<std::uint64_t>(width),
                      static_cast<std::uint64_t>(seed_index));
  return cfg;
}

inline SweepResult run_sweep(const SweepConfig& sweep, int workers) {
  if (sweep.seeds_per_width < 1)
    throw std::invalid_argument("run_sweep: seeds_per_width must be >= 1");
  if (sweep.widths.empty()) throw std::invalid_argument("run_sweep: no widths");
  if (workers < 1) workers = 1;

  struct Job {
    int width;
    int seed_index;
  };
  std::vector<Job> jobs;
  for (int w : sweep.widths)
    for (int s = 0; s < sweep.seeds_per_width; ++s) jobs.push_back({w, s});

  std::vector<RunRecord> results(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) return;
      TrainConfig cfg = run_config(sweep.base, jobs[i].width, jobs[i].seed_index);
      RunRecord rec = train(cfg);
      rec.seed_index = jobs[i].seed_index;
      results[i] = std::move(rec);
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int k = 0; k < workers; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }

  SweepResult out;
  for (std::size_t i = 0; i < jobs.size(); ++i)
    out.by_width[jobs[i].width].push_back(std::move(results[i]));
  return out;
}

}  // namespace lotscale
