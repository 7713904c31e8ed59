#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "batch_means.hpp"
#include "errors.hpp"
#include "frames.hpp"
#include "model.hpp"
#include "normalform.hpp"
#include "rng.hpp"

namespace striplyap {

struct TrajectoryOptions {
  std::int64_t steps = 1'000'000;  // total, burn-in included
  std::int64_t burn_in = 1000;
  std::int64_t batch_length = 1000;
  int frame_size = 0;  // 0 means a full L-frame
  // Adds λ<u_p|P|u_p>, which has zero conditional mean, to the log
  // expansion of slot p. It cancels the first-order fluctuation.
  bool control_variate = true;
  int reproject_every = 1000;
  bool track_weights = true;
  WeightOptions weights;
  bool track_alignment = false;
  bool track_balance = false;
  // Evolve with T itself instead of R(1 - λP); no weights are available.
  bool raw = false;
};

struct TrajectoryResult {
  int frame_size = 0;
  std::int64_t retained = 0;
  // slot log expansions (p entries) followed by their partial sums (p entries)
  BatchMeans logs;
  Vec raw_log_sum;  // without control variate
  WeightStats weights;
  // 1 - |det G_j|^2 per hyperbolic channel in decreasing-eta order
  BatchMeans alignment;
  // rho^+ - rho^- for (elliptic slot, hyperbolic channel), slot-major
  BatchMeans balance;
  double max_sum_rule_defect = 0.0;
  double max_frame_residual = 0.0;
  Mat final_frame;
};

/// Number of frame slots carried by hyperbolic channels.
inline int hyperbolic_slots(const NormalFormData& nf) {
  int n = 0;
  for (int j : nf.hyperbolic_order) n += nf.nu[static_cast<std::size_t>(j)];
  return n;
}

/// Misalignment 1 - |<w^+_j ∧ ...|u_s ∧ ...>|^2 of each hyperbolic channel
/// with its block of frame slots, from re/im parts of W^* u.
inline void misalignment(const NormalFormData& nf, const Mat& re, const Mat& im, Vec& out) {
  out.resize(static_cast<Eigen::Index>(nf.hyperbolic_order.size()));
  int slot = 0;
  Eigen::Index i = 0;
  for (int j : nf.hyperbolic_order) {
    const auto& modes = nf.channel_modes[static_cast<std::size_t>(j)];
    const int nu = static_cast<int>(modes.size());
    if (slot + nu > re.cols()) {
      out[i++] = std::nan("");
      slot += nu;
      continue;
    }
    cplx det;
    if (nu == 1) {
      det = cplx(re(modes[0], slot), im(modes[0], slot));
    } else {
      const cplx a(re(modes[0], slot), im(modes[0], slot));
      const cplx b(re(modes[0], slot + 1), im(modes[0], slot + 1));
      const cplx c(re(modes[1], slot), im(modes[1], slot));
      const cplx d(re(modes[1], slot + 1), im(modes[1], slot + 1));
      det = a * d - b * c;
    }
    out[i++] = 1.0 - std::norm(det);
    slot += nu;
  }
}

inline TrajectoryResult run_trajectory(const StripModel& model, const NormalFormData& nf, SplitMix64& rng,
                                       const TrajectoryOptions& opt) {
  const int L = model.width;
  if (nf.L != L) throw InvalidArgument("run_trajectory: normal form width differs from model");
  if (!(opt.steps > opt.burn_in && opt.burn_in >= 0)) throw InvalidArgument("run_trajectory: need steps > burn_in >= 0");
  const int p = opt.frame_size > 0 ? opt.frame_size : L;
  if (p > L) throw InvalidArgument("run_trajectory: frame size exceeds width");
  const double lambda = model.coupling;
  const bool weights = opt.track_weights && !opt.raw;
  const bool align = opt.track_alignment && !opt.raw && !nf.hyperbolic_order.empty();
  const int hslots = hyperbolic_slots(nf);
  const int nh = static_cast<int>(nf.hyperbolic_order.size());
  const bool balance = opt.track_balance && !opt.raw && nh > 0 && p > hslots;
  const bool cv = opt.control_variate && !opt.raw;

  TrajectoryResult res;
  res.frame_size = p;
  res.logs = BatchMeans(2 * p, opt.batch_length);
  res.raw_log_sum = Vec::Zero(p);
  if (weights) res.weights = WeightStats(p, nf.channels(), opt.weights);
  if (align) res.alignment = BatchMeans(nh, opt.batch_length);
  if (balance) res.balance = BatchMeans((p - hslots) * nh, opt.batch_length);

  Mat U = random_frame(rng, L, p).u;
  Mat X(L, p), Z(L, p), top(L, p), re, im;
  Vec v(L), logs(p), cvterm = Vec::Zero(p), sample(2 * p), mis, bal(balance ? (p - hslots) * nh : 0);
  WeightTable table;
  const Mat lap = laplacian(L);

  for (std::int64_t n = 0; n < opt.steps; ++n) {
    sample_column(model, rng, v);
    if (opt.raw) {
      top = U.topRows(L);
      X.noalias() = lap * top;
      X.array() += top.array().colwise() * (lambda * v.array() - model.energy);
      X -= U.bottomRows(L);
      U.bottomRows(L) = top;
      U.topRows(L) = X;
    } else {
      auto T_ = U.topRows(L);
      auto B_ = U.bottomRows(L);
      X.noalias() = nf.mh * T_;
      X.array().colwise() *= v.array();
      Z.noalias() = nf.mh.transpose() * X;
      Z *= lambda;
      if (cv) cvterm = (B_.array() * Z.array()).colwise().sum().transpose();
      B_ -= Z;
      top = T_;
      T_.array() = top.array().colwise() * nf.ra.array() + B_.array().colwise() * nf.rb.array();
      B_.array() = top.array().colwise() * nf.rc.array() + B_.array().colwise() * nf.ra.array();
    }
    orthonormalize(U, logs.data());

    if (opt.reproject_every > 0 && (n + 1) % opt.reproject_every == 0) {
      res.max_frame_residual = std::max({res.max_frame_residual, orthonormality_residual(U), isotropy_residual(U)});
      symplectic_reproject(U);
    }
    if (n < opt.burn_in) continue;

    ++res.retained;
    res.raw_log_sum += logs;
    sample.head(p) = cv ? Vec(logs + cvterm) : logs;
    double acc = 0.0;
    for (int q = 0; q < p; ++q) {
      acc += sample[q];
      sample[p + q] = acc;
    }
    res.logs.add(sample);

    if (weights || align || balance) {
      channel_weights(U, nf, table, re, im);
      if (weights) {
        res.weights.add(table);
        res.max_sum_rule_defect = std::max(res.max_sum_rule_defect, sum_rule_defect(table, nf));
      }
      if (align) {
        misalignment(nf, re, im, mis);
        res.alignment.add(mis);
      }
      if (balance) {
        Eigen::Index i = 0;
        for (int s = hslots; s < p; ++s)
          for (int j : nf.hyperbolic_order) bal[i++] = table.plus(s, j) - table.minus(s, j);
        res.balance.add(bal);
      }
    }
  }
  res.max_frame_residual = std::max({res.max_frame_residual, orthonormality_residual(U), isotropy_residual(U)});
  res.final_frame = U;
  return res;
}

}  // namespace striplyap
