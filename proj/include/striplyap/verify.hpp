#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "frames.hpp"
#include "lyapunov.hpp"
#include "model.hpp"
#include "normalform.hpp"
#include "rng.hpp"
#include "spectral.hpp"
#include "trajectory.hpp"

namespace striplyap {

inline constexpr double kIdentityTol = 1e-8;
inline constexpr double kZThreshold = 5.0;

struct VerifyEntry {
  std::string name;
  std::string identity;
  double value = 0.0;
  double threshold = 0.0;
  bool pass = false;
  std::string kind;  // residual, z-score, ratio, rejection
  std::string note;
};

struct VerifyReport {
  std::vector<VerifyEntry> entries;
  bool rejected = false;  // the model itself was rejected (parabolic channel)

  bool pass() const {
    return std::all_of(entries.begin(), entries.end(), [](const VerifyEntry& e) { return e.pass; });
  }
  void residual(std::string name, std::string identity, double value, double threshold = kIdentityTol,
                std::string note = {}) {
    entries.push_back({std::move(name), std::move(identity), value, threshold, value <= threshold, "residual",
                       std::move(note)});
  }
  void append(const VerifyReport& o) {
    entries.insert(entries.end(), o.entries.begin(), o.entries.end());
    rejected = rejected || o.rejected;
  }
};

inline VerifyReport parabolic_rejection(const ParabolicChannel& e) {
  VerifyReport rep;
  rep.rejected = true;
  rep.entries.push_back({"parabolic rejection", "|mu_j| = 2 is refused", std::abs(e.mu()), 2.0, true, "rejection",
                         "channel " + std::to_string(e.channel())});
  return rep;
}

/// Normalized J-eigenvectors (e_l - iσ e_{l+L})/√2 with J v = iσ v.
inline CVec coordinate_J_eigenvector(int L, int l, int sigma) {
  CVec v = CVec::Zero(2 * L);
  v[l] = 1.0 / std::sqrt(2.0);
  v[l + L] = cplx(0.0, -sigma / std::sqrt(2.0));
  return v;
}

/// Deterministic identities on random disorder columns and random frames.
inline VerifyReport verify_algebra(int L, double E, double lambda, int trials, std::uint64_t seed,
                                   DisorderKind disorder = DisorderKind::rademacher) {
  VerifyReport rep;
  ChannelData cd;
  try {
    cd = channel_spectrum(L, E);
  } catch (const ParabolicChannel& e) {
    return parabolic_rejection(e);
  }
  NormalFormData nf;
  try {
    nf = build_normal_form(cd);
  } catch (const NumericalDegeneracy& e) {
    rep.entries.push_back({"normal form", "construction", 1.0, kIdentityTol, false, "residual", e.what()});
    return rep;
  }
  for (const auto& r : nf.residuals) rep.residual("normal form: " + r.name, r.name, r.value);

  StripModel model;
  model.width = L;
  model.energy = E;
  model.coupling = lambda;
  model.disorder = disorder;
  SplitMix64 rng = SplitMix64::substream(seed, 0);
  const Mat J = symplectic_form(L);

  double transfer = 0.0, conj = 0.0, lie = 0.0, bsym = 0.0, elem = 0.0, elem_adj = 0.0;
  double vhat_sym = 0.0, parseval = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Vec v = sample_column(model, rng);
    transfer = std::max(transfer, symplectic_residual(build_transfer(model, v)));
    PerturbationMatrix pm;
    try {
      pm = build_P(nf, v, lambda);
    } catch (const NumericalDegeneracy&) {
      pm.consistency_residual = std::numeric_limits<double>::infinity();
    }
    conj = std::max(conj, pm.consistency_residual);
    if (!std::isfinite(pm.consistency_residual)) continue;
    lie = std::max(lie, max_abs(Mat(pm.P.transpose() * J + J * pm.P)));
    const Mat B = pm.P.bottomLeftCorner(L, L);
    bsym = std::max(bsym, max_abs(Mat(B - B.transpose())));
    const FourierPotential fp = fourier_potential(v);
    for (int k = 0; k < L; ++k) vhat_sym = std::max(vhat_sym, std::abs(std::conj(fp(k)) - fp(-k)));
    parseval = std::max(parseval, std::abs(fp.vhat.squaredNorm() - v.squaredNorm() / L));
    const CMat X = nf.W.adjoint() * pm.P.cast<cplx>() * nf.W;
    const CMat Y = nf.W.adjoint() * pm.P.transpose().cast<cplx>() * nf.W;
    for (int a = 0; a < 2 * L; ++a)
      for (int b = 0; b < 2 * L; ++b) {
        const int l = a % L, tau = a < L ? 1 : -1, k = b % L, sigma = b < L ? 1 : -1;
        elem = std::max(elem, std::abs(X(a, b) - perturbation_element(nf, fp, l, k, tau, sigma)));
        elem_adj = std::max(elem_adj, std::abs(Y(a, b) - perturbation_adjoint_element(nf, fp, l, k, tau, sigma)));
      }
  }
  rep.residual("transfer symplectic", "T^t J T = J", transfer);
  rep.residual("normal form of T", "M^-1 T M = R(1 - lambda P)", conj);
  rep.residual("P in sp(2L)", "P^t J + J P = 0", lie);
  rep.residual("P block symmetric", "lower-left block of P is symmetric", bsym);
  rep.residual("Fourier potential symmetry", "conj(vhat(k)) = vhat(-k)", vhat_sym);
  rep.residual("Fourier potential Parseval", "sum |vhat|^2 = (1/L) sum v^2", parseval);
  rep.residual("matrix elements of P", "<w_l^tau|P|w_k^sigma> closed form", elem);
  rep.residual("matrix elements of P^*", "<w_l^tau|P^*|w_k^sigma> closed form", elem_adj);

  // frames
  double embed = 0.0, lagr = 0.0, lagr_w = 0.0, cocycle = 0.0, sumrule = 0.0, balance = 0.0, frame = 0.0;
  for (int t = 0; t < trials; ++t) {
    const Mat u = random_frame(rng, L, L).u;
    frame = std::max({frame, orthonormality_residual(u), isotropy_residual(u)});
    const Mat O = unitary_embedding(u);
    embed = std::max({embed, max_abs(Mat(O.transpose() * O - Mat::Identity(2 * L, 2 * L))),
                      max_abs(Mat(O.transpose() * J * O - J))});
    for (int j = 0; j < L; ++j)
      for (int k = 0; k < L; ++k)
        for (int sj : {1, -1})
          for (int sk : {1, -1})
            lagr = std::max(lagr, lagrangian_defect(u, coordinate_J_eigenvector(L, j, sj), sj,
                                                    coordinate_J_eigenvector(L, k, sk), sk, j == k && sj == sk));
    for (int a = 0; a < 2 * L; ++a)
      for (int b = 0; b < 2 * L; ++b) {
        if (!cd[nf.mode_channel[a % L]].elliptic() || !cd[nf.mode_channel[b % L]].elliptic()) continue;
        lagr_w = std::max(lagr_w, lagrangian_defect(u, nf.W.col(a), a < L ? 1 : -1, nf.W.col(b), b < L ? 1 : -1, a == b));
      }
    const WeightTable w = channel_weights(SymplecticFrame{u}, nf);
    sumrule = std::max(sumrule, sum_rule_defect(w, nf));
    for (int j = 0; j < nf.channels(); ++j)
      if (cd[j].elliptic()) balance = std::max(balance, (w.plus.col(j) - w.minus.col(j)).cwiseAbs().maxCoeff());

    const int p = std::min(L, 5);
    const SymplecticFrame f{u.leftCols(p)};
    const Mat T1 = build_transfer(model, sample_column(model, rng));
    const Mat T2 = build_transfer(model, sample_column(model, rng));
    const StepResult a = frame_action(T1, f);
    const StepResult b = frame_action(T2, a.frame);
    const StepResult c = frame_action(T2 * T1, f);
    cocycle = std::max({cocycle, max_abs(Mat(b.frame.u - c.frame.u)),
                        (a.log_expansions + b.log_expansions - c.log_expansions).cwiseAbs().maxCoeff()});
  }
  rep.residual("random frame", "orthonormal and isotropic", frame);
  rep.residual("unitary embedding", "(u, Ju) orthogonal and symplectic", embed);
  rep.residual("Lagrangian identity, coordinate eigenvectors", "(1 + s_j s_k) <v_j|Pi|v_k> = delta_jk", lagr);
  rep.residual("Lagrangian identity, elliptic basis vectors", "(1 + s_j s_k) <w_j|Pi|w_k> = delta_jk", lagr_w);
  rep.residual("sum rules on random frames", "sum_j rho_pj = 1, sum_p rho_pj = nu_j", sumrule);
  rep.residual("elliptic weight balance", "rho^+ = rho^- on elliptic channels for real frames", balance);
  rep.residual("frame action cocycle", "U_{ST} = U_S U_T", cocycle);

  TrajectoryOptions topt;
  topt.steps = 2000;
  topt.burn_in = 0;
  topt.reproject_every = 500;
  SplitMix64 trng = SplitMix64::substream(seed, 1);
  const TrajectoryResult tr = run_trajectory(model, nf, trng, topt);
  rep.residual("sum rules along a trajectory", "sum_j rho_pj = 1, sum_p rho_pj = nu_j", tr.max_sum_rule_defect);
  rep.residual("frame residual along a trajectory", "orthonormal and isotropic", tr.max_frame_residual);
  return rep;
}

namespace detail {

/// Running mean and standard error of complex samples, componentwise.
struct ComplexAccumulator {
  Mat sr, si, qr, qi;
  void resize(Eigen::Index r, Eigen::Index c) {
    sr = si = qr = qi = Mat::Zero(r, c);
  }
  void add(const CMat& x) {
    const Mat re = x.real(), im = x.imag();
    sr += re;
    si += im;
    qr += re.cwiseProduct(re);
    qi += im.cwiseProduct(im);
  }
};

struct ZScore {
  double z = 0.0;
  cplx mean;
  cplx target;
};

inline double zscore(double sum, double sumsq, double n, double target) {
  const double mean = sum / n;
  const double var = std::max(0.0, (sumsq / n - mean * mean)) * n / (n - 1.0);
  const double se = std::sqrt(var / n);
  const double diff = std::abs(mean - target);
  if (se == 0.0) return diff <= 1e-12 * std::max(1.0, std::abs(target)) ? 0.0 : std::numeric_limits<double>::infinity();
  // absorb rounding noise when the spread is at round-off scale
  if (diff <= 1e-12 * std::max(1.0, std::abs(target))) return 0.0;
  return diff / se;
}

}  // namespace detail

/// Monte-Carlo check of the disorder averages of matrix-element products
/// for random unit vectors in the ranges of the channel projections.
inline VerifyReport verify_moments(int L, double E, std::int64_t trials, std::uint64_t seed,
                                   DisorderKind disorder = DisorderKind::rademacher) {
  VerifyReport rep;
  ChannelData cd;
  try {
    cd = channel_spectrum(L, E);
  } catch (const ParabolicChannel& e) {
    return parabolic_rejection(e);
  }
  const NormalFormData nf = build_normal_form(cd);
  const int nch = cd.count();
  const int nv = 2 * nch;  // vector a = 2j + s, s = 0 for +, 1 for -
  SplitMix64 rng = SplitMix64::substream(seed, 0);

  CMat C = CMat::Zero(2 * L, nv);
  for (int j = 0; j < nch; ++j)
    for (int s = 0; s < 2; ++s) {
      CVec a(cd[j].nu);
      for (int i = 0; i < cd[j].nu; ++i) a[i] = cplx(rng.gaussian(), rng.gaussian());
      a.normalize();
      for (int i = 0; i < cd[j].nu; ++i) C(cd[j].modes[static_cast<std::size_t>(i)] + s * L, 2 * j + s) = a[i];
    }
  const CMat V = nf.W * C;
  const CMat Vtop = V.topRows(L);
  const CMat VbotH = V.bottomRows(L).adjoint();
  const CMat mhV = nf.mh.cast<cplx>() * Vtop;

  StripModel model;
  model.width = L;
  model.energy = E;
  model.disorder = disorder;

  detail::ComplexAccumulator m1, m2, m3, m4a, m4b;
  m1.resize(nv, nv);
  m2.resize(nv, nv);
  m3.resize(nv, nv);
  m4a.resize(nv, nv);
  m4b.resize(nv, nv);
  Vec m5 = Vec::Zero(nv), q5 = Vec::Zero(nv);
  double same_sign = 0.0, doubling = 0.0;
  Vec v(L);
  CMat BV(L, nv), Y(nv, nv), Yt(nv, nv), RPV(2 * L, nv);
  const CMat mhT = nf.mh.transpose().cast<cplx>();
  for (std::int64_t t = 0; t < trials; ++t) {
    sample_column(model, rng, v);
    BV.noalias() = mhT * (v.cast<cplx>().asDiagonal() * mhV);  // B V_top
    Y.noalias() = VbotH * BV;                                  // <w_a|P|w_b>
    Yt = Y + Y.adjoint();                                      // <w_a|P + P^*|w_b>
    m1.add(Y);
    m2.add(CMat(Y.cwiseProduct(Y.transpose())));
    m3.add(CMat(Y.transpose().cwiseAbs2().cast<cplx>()));
    m4a.add(CMat(Yt.cwiseProduct(Yt.transpose())));
    m4b.add(CMat(Yt.cwiseAbs2().cast<cplx>()));
    // R P V = R (0; B V_top)
    RPV.topRows(L) = nf.rb.cast<cplx>().asDiagonal() * BV;
    RPV.bottomRows(L) = nf.ra.cast<cplx>().asDiagonal() * BV;
    const Vec n2 = RPV.colwise().squaredNorm().transpose();
    m5 += n2;
    q5 += n2.cwiseProduct(n2);
    for (int a = 0; a < nv; ++a)
      for (int b = 0; b < nv; ++b) {
        const int l = a / 2, k = b / 2;
        if (!cd[l].elliptic() || !cd[k].elliptic()) continue;
        if (a % 2 == b % 2)
          same_sign = std::max(same_sign, std::abs(Yt(a, b)));
        else
          doubling = std::max(doubling, std::abs(Yt(a, b) - 2.0 * Y(a, b)));
      }
  }
  const double n = static_cast<double>(trials);
  rep.residual("elliptic P~ same-sign block", "pi_l^s P~ pi_k^s = 0", same_sign);
  rep.residual("elliptic P~ opposite-sign block", "pi_l^s P~ pi_k^-s = 2 pi_l^s P pi_k^-s", doubling);

  auto entry = [&](const std::string& item, const std::string& identity, auto&& visit) {
    double worst = 0.0;
    int count = 0;
    std::string where;
    visit([&](double z, const std::string& label) {
      if (++count == 1 || z > worst) {
        worst = z;
        where = label;
      }
    });
    rep.entries.push_back({"moment (" + item + ")", identity, worst, kZThreshold, worst <= kZThreshold, "z-score",
                           std::to_string(count) + " components, worst at " + where});
  };
  auto label = [](int a, int b) {
    auto one = [](int x) { return std::to_string(x / 2) + (x % 2 ? "-" : "+"); };
    return one(a) + "," + one(b);
  };
  auto complex_z = [&](const detail::ComplexAccumulator& acc, int a, int b, cplx target) {
    return std::max(detail::zscore(acc.sr(a, b), acc.qr(a, b), n, target.real()),
                    detail::zscore(acc.si(a, b), acc.qi(a, b), n, target.imag()));
  };

  entry("i", "E <w|P|w'> = 0", [&](auto&& put) {
    for (int a = 0; a < nv; ++a)
      for (int b = 0; b < nv; ++b) put(complex_z(m1, a, b, 0.0), label(a, b));
  });
  auto pair_item = [&](MomentItem item, const detail::ComplexAccumulator& acc, const std::string& identity) {
    int skipped = 0;
    entry(std::string(to_string(item)), identity, [&](auto&& put) {
      for (int a = 0; a < nv; ++a)
        for (int b = 0; b < nv; ++b) {
          const int l = a / 2, tau = a % 2 ? -1 : 1, k = b / 2, sigma = b % 2 ? -1 : 1;
          cplx target;
          try {
            target = moment_target(cd, item, l, k, tau, sigma);
          } catch (const InvalidCase&) {
            ++skipped;
            continue;
          }
          put(complex_z(acc, a, b, target), label(a, b));
        }
    });
    rep.entries.back().note += ", " + std::to_string(skipped) + " excluded";
  };
  pair_item(MomentItem::ii, m2, "E <w_l|P|w_k><w_k|P|w_l>");
  pair_item(MomentItem::iii, m3, "E <w_l|P^*|w_k><w_k|P|w_l>");
  {
    int skipped = 0;
    entry("iv", "E <w_l^s|P~|w_k^-s><w_k^-s|P~|w_l^s> and conjugate form", [&](auto&& put) {
      for (int a = 0; a < nv; ++a)
        for (int b = 0; b < nv; ++b) {
          if (a % 2 == b % 2) continue;
          const int l = a / 2, k = b / 2, s = a % 2 ? -1 : 1;
          cplx target;
          try {
            target = moment_target(cd, MomentItem::iv, l, k, s, -s);
          } catch (const InvalidCase&) {
            ++skipped;
            continue;
          }
          put(complex_z(m4a, a, b, target), label(a, b));
          put(complex_z(m4b, a, b, target), label(a, b) + " conj");
        }
    });
    rep.entries.back().note += ", " + std::to_string(skipped) + " excluded";
  }
  entry("v", "E <w_l|(RP)^*(RP)|w_l>", [&](auto&& put) {
    for (int a = 0; a < nv; ++a)
      put(detail::zscore(m5[a], q5[a], n, moment_target(cd, MomentItem::v, a / 2, a / 2, 1, 1).real()),
          label(a, a));
  });
  return rep;
}

struct DynamicsOptions {
  std::int64_t steps = 200'000;
  int trajectories = 2;
  int threads = 0;
};

/// Trajectory-level checks: sum rules, frame residuals, alignment of the
/// hyperbolic slots and its λ² scaling, ± balance of elliptic slots.
inline VerifyReport verify_dynamics(const StripModel& model, const DynamicsOptions& dopt = {}) {
  VerifyReport rep;
  ChannelData cd;
  try {
    cd = channel_spectrum(model.width, model.energy);
  } catch (const ParabolicChannel& e) {
    return parabolic_rejection(e);
  }
  EstimateOptions opt;
  opt.steps = dopt.steps;
  opt.trajectories = dopt.trajectories;
  opt.threads = dopt.threads;
  opt.track_alignment = true;
  opt.track_balance = true;
  const SpectrumRun run = estimate_spectrum(model, opt);
  rep.residual("sum rules along trajectories", "sum_j rho_pj = 1, sum_p rho_pj = nu_j", run.max_sum_rule_defect);
  rep.residual("frame residual along trajectories", "orthonormal and isotropic", run.max_frame_residual);
  if (cd.all_elliptic()) return rep;

  {
    StripModel free = model;
    free.coupling = 0.0;
    EstimateOptions o0 = opt;
    o0.trajectories = 1;
    o0.steps = std::min<std::int64_t>(dopt.steps, 20'000);
    o0.burn_in = 2000;
    const SpectrumRun r0 = estimate_spectrum(free, o0);
    const Vec mis = r0.alignment.mean();
    rep.residual("alignment at zero coupling", "1 - |<w^+ wedge|u wedge>|^2 = 0 after transient", mis.maxCoeff());
    const Vec expected = build_normal_form(cd).eta_hat;
    rep.residual("hyperbolic exponents at zero coupling", "gamma_p = eta of the aligned channel",
                 (r0.estimate.gammas - expected).cwiseAbs().maxCoeff());
  }
  if (model.coupling != 0.0) {
    StripModel half = model;
    half.coupling = model.coupling / 2.0;
    const SpectrumRun rh = estimate_spectrum(half, opt);
    const Vec a = run.alignment.mean();
    const Vec b = rh.alignment.mean();
    const NormalFormData nf = build_normal_form(cd);
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      const double ratio = a[i] / b[i];
      const bool ok = ratio >= 2.0 && ratio <= 8.0;
      rep.entries.push_back({"alignment scaling, channel " + std::to_string(nf.hyperbolic_order[static_cast<std::size_t>(i)]),
                             "misalignment(lambda) / misalignment(lambda/2) in [2, 8]", ratio, 8.0, ok, "ratio",
                             "misalignment " + std::to_string(a[i]) + " vs " + std::to_string(b[i])});
    }
    // ± balance of elliptic slots in hyperbolic channels
    const int hs = hyperbolic_slots(nf);
    const Mat plus = run.weights.first_plus();
    const Mat minus = run.weights.first_minus();
    const Vec diff = run.balance.mean();
    const Vec se = run.balance.standard_error();
    double worst = 0.0;
    Eigen::Index i = 0;
    for (int s = hs; s < model.width; ++s)
      for (int j : nf.hyperbolic_order) {
        const double allowed = 0.2 * (plus(s, j) + minus(s, j)) + 5.0 * se[i];
        worst = std::max(worst, std::abs(diff[i]) / allowed);
        ++i;
      }
    rep.entries.push_back({"elliptic slots in hyperbolic channels", "|<rho^+> - <rho^->| <= 0.2 (<rho^+> + <rho^->) + 5 se",
                           worst, 1.0, worst <= 1.0, "ratio", "value is the largest |difference| / allowance"});
  }
  return rep;
}

}  // namespace striplyap
