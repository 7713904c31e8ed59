#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <string>
#include <thread>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "normalform.hpp"
#include "rng.hpp"
#include "spectral.hpp"
#include "trajectory.hpp"

namespace striplyap {

inline std::int64_t default_burn_in(double lambda) {
  if (lambda == 0.0) return 1000;
  return std::max<std::int64_t>(1000, static_cast<std::int64_t>(std::ceil(10.0 / (lambda * lambda))));
}

struct EstimateOptions {
  std::int64_t steps = 1'000'000;  // per trajectory, burn-in included
  std::int64_t burn_in = -1;       // negative selects default_burn_in(λ)
  int trajectories = 8;
  std::int64_t batch_length = 1000;
  bool control_variate = true;
  bool raw = false;
  int threads = 0;  // 0: hardware concurrency, capped by STRIPLYAP_THREADS
  int frame_size = 0;
  bool track_weights = true;
  WeightOptions weights;
  bool track_alignment = false;
  bool track_balance = false;
};

struct LyapunovEstimate {
  Vec gammas;
  Vec stderrs;
  Vec partial_sums;     // Σ_{l ≤ p} γ_l
  Vec partial_stderrs;
  Vec raw_gammas;       // without control variate
  std::int64_t steps = 0;
  std::int64_t burn_in = 0;
  std::int64_t batches = 0;
  int trajectories = 0;
  std::uint64_t seed = 0;
  StripModel model;

  double bottom() const { return gammas[gammas.size() - 1]; }
  double bottom_stderr() const { return stderrs[stderrs.size() - 1]; }
  double sum() const { return partial_sums[partial_sums.size() - 1]; }
  double sum_stderr() const { return partial_stderrs[partial_stderrs.size() - 1]; }
};

struct SpectrumRun {
  LyapunovEstimate estimate;
  ChannelData channels;
  WeightStats weights;
  BatchMeans alignment;
  BatchMeans balance;
  double max_sum_rule_defect = 0.0;
  double max_frame_residual = 0.0;
};

inline int worker_count(int requested, int jobs) {
  int n = requested > 0 ? requested : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("STRIPLYAP_THREADS")) {
    const int cap = std::atoi(env);
    if (cap > 0) n = std::min(n, cap);
  }
  return std::max(1, std::min(n, jobs));
}

/// Runs trajectories in parallel, each on SplitMix64::substream(seed, index),
/// and merges the results in index order.
inline SpectrumRun estimate_spectrum(const StripModel& model, const EstimateOptions& opt = {}) {
  model.validate();
  if (opt.trajectories < 1) throw InvalidArgument("estimate_spectrum: need at least one trajectory");
  SpectrumRun run;
  run.channels = channel_spectrum(model.width, model.energy);
  const NormalFormData nf = build_normal_form(run.channels);

  TrajectoryOptions topt;
  topt.burn_in = opt.burn_in >= 0 ? opt.burn_in : default_burn_in(model.coupling);
  topt.steps = opt.steps;
  topt.batch_length = opt.batch_length;
  topt.control_variate = opt.control_variate;
  topt.raw = opt.raw;
  topt.frame_size = opt.frame_size;
  topt.track_weights = opt.track_weights;
  topt.weights = opt.weights;
  topt.track_alignment = opt.track_alignment;
  topt.track_balance = opt.track_balance;

  const int n = opt.trajectories;
  std::vector<TrajectoryResult> results(static_cast<std::size_t>(n));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  auto work = [&](int i) {
    try {
      SplitMix64 rng = SplitMix64::substream(model.seed, static_cast<std::uint64_t>(i));
      results[static_cast<std::size_t>(i)] = run_trajectory(model, nf, rng, topt);
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  };
  const int workers = worker_count(opt.threads, n);
  if (workers == 1) {
    for (int i = 0; i < n; ++i) work(i);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (int i = w; i < n; i += workers) work(i);
      });
    for (auto& t : pool) t.join();
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  BatchMeans logs;
  Vec raw_sum;
  std::int64_t retained = 0;
  for (auto& r : results) {
    logs.merge(r.logs);
    run.weights.merge(r.weights);
    run.alignment.merge(r.alignment);
    run.balance.merge(r.balance);
    run.max_sum_rule_defect = std::max(run.max_sum_rule_defect, r.max_sum_rule_defect);
    run.max_frame_residual = std::max(run.max_frame_residual, r.max_frame_residual);
    raw_sum = raw_sum.size() ? Vec(raw_sum + r.raw_log_sum) : r.raw_log_sum;
    retained += r.retained;
  }
  const int p = results.front().frame_size;
  const Vec mean = logs.mean();
  const Vec se = logs.standard_error();
  auto& est = run.estimate;
  est.gammas = mean.head(p);
  est.stderrs = se.head(p);
  est.partial_sums = mean.tail(p);
  est.partial_stderrs = se.tail(p);
  est.raw_gammas = raw_sum / static_cast<double>(retained);
  est.steps = opt.steps;
  est.burn_in = topt.burn_in;
  est.batches = logs.batches();
  est.trajectories = n;
  est.seed = model.seed;
  est.model = model;
  return run;
}

struct PartialSum {
  double value = 0.0;
  double stderr_value = 0.0;
};

/// Σ_{l ≤ p} γ_l from the volume growth of a p-frame.
inline PartialSum estimate_partial_sum(const StripModel& model, int p, EstimateOptions opt = {}) {
  if (p < 1 || p > model.width) throw InvalidArgument("estimate_partial_sum: need 1 <= p <= L");
  opt.frame_size = p;
  opt.track_weights = false;
  const SpectrumRun run = estimate_spectrum(model, opt);
  return {run.estimate.sum(), run.estimate.sum_stderr()};
}

}  // namespace striplyap
