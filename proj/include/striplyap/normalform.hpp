#pragma once

// Symplectic normal form of the free transfer matrix. Coordinates are
// 0-based: Fourier mode q in 0..L-1, phase-space index a in 0..2L-1 with
// a = q for the upper half and a = q + L for the lower half.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "spectral.hpp"

namespace striplyap {

inline constexpr double kNormalFormTol = 1e-8;

struct Residual {
  std::string name;
  double value = 0.0;
};

struct NormalFormData {
  int L = 1;
  double energy = 0.0;

  CMat f;  // f(s,q) = exp(2πiqs/L)/√L
  CMat d;  // mixing of the reflection pairs (q, L-q)
  Mat m;   // real orthogonal, m = f d
  std::vector<int> reflection;
  Mat S;

  Vec mu;  // per mode
  Vec h;
  CVec g;
  Vec eta;

  Mat M;
  Mat M_inv;
  Mat R;
  CMat W;
  CVec R_eigenvalues;  // R W = W diag(R_eigenvalues)
  std::vector<std::array<CMat, 2>> projections;  // [channel][0 for +, 1 for -]
  Vec eta_hat;

  // per-mode blocks of R: [[ra, rb], [rc, ra]]
  Vec ra, rb, rc;
  Mat mh;  // m diag(h); the lower-left block of P is mh^t V mh
  Mat WH_re, WH_im;
  std::vector<int> mode_channel;
  std::vector<std::vector<int>> channel_modes;
  std::vector<int> nu;
  std::vector<int> hyperbolic_order;  // hyperbolic channels by decreasing eta

  std::vector<Residual> residuals;

  int channels() const { return static_cast<int>(channel_modes.size()); }
  const CMat& projection(int j, int sign) const {
    return projections[static_cast<std::size_t>(j)][sign > 0 ? 0 : 1];
  }
  double max_residual() const {
    double r = 0.0;
    for (const auto& x : residuals) r = std::max(r, x.value);
    return r;
  }
};

inline double max_abs(const Mat& A) { return A.size() ? A.cwiseAbs().maxCoeff() : 0.0; }
inline double max_abs(const CMat& A) { return A.size() ? A.cwiseAbs().maxCoeff() : 0.0; }

inline CMat fourier_matrix(int L) {
  CMat f(L, L);
  const double s = 1.0 / std::sqrt(static_cast<double>(L));
  for (int site = 0; site < L; ++site)
    for (int q = 0; q < L; ++q)
      f(site, q) = std::polar(s, 2.0 * std::numbers::pi * ((static_cast<long>(q) * site) % L) / L);
  return f;
}

inline CMat mixing_matrix(int L) {
  CMat d = CMat::Zero(L, L);
  const double r = 1.0 / std::sqrt(2.0);
  for (int q = 0; q < L; ++q) {
    const int p = (L - q) % L;
    if (p == q) {
      d(q, q) = 1.0;
    } else if (q < p) {
      d(q, q) = cplx(0.0, -r);
      d(q, p) = r;
      d(p, q) = cplx(0.0, r);
      d(p, p) = r;
    }
  }
  return d;
}

/// A = [[Δ - E, -1], [1, 0]].
inline Mat free_transfer(int L, double E) {
  StripModel model;
  model.width = L;
  model.energy = E;
  return build_transfer(model, Vec::Zero(L));
}

inline std::vector<int> channels_by_decreasing_eta(const ChannelData& cd) {
  std::vector<int> order = cd.hyperbolic;
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return cd[a].eta > cd[b].eta; });
  return order;
}

/// Expansion exponent of each frame slot once hyperbolic slots are aligned.
inline Vec frame_exponents(const ChannelData& cd) {
  Vec e = Vec::Zero(cd.width);
  int p = 0;
  for (int j : channels_by_decreasing_eta(cd))
    for (int i = 0; i < cd[j].nu; ++i) e[p++] = cd[j].eta;
  return e;
}

inline NormalFormData build_normal_form(const ChannelData& cd) {
  const int L = cd.width;
  NormalFormData nf;
  nf.L = L;
  nf.energy = cd.energy;
  nf.f = fourier_matrix(L);
  nf.d = mixing_matrix(L);
  const CMat fd = nf.f * nf.d;
  nf.m = fd.real();

  nf.reflection.resize(static_cast<std::size_t>(L));
  nf.S = Mat::Zero(L, L);
  for (int q = 0; q < L; ++q) {
    nf.reflection[static_cast<std::size_t>(q)] = (L - q) % L;
    nf.S((L - q) % L, q) = 1.0;
  }

  nf.mu.resize(L);
  nf.h.resize(L);
  nf.g.resize(L);
  nf.eta.resize(L);
  nf.mode_channel = cd.mode_channel;
  for (const auto& c : cd.channels) {
    nf.channel_modes.push_back(c.modes);
    nf.nu.push_back(c.nu);
    for (int q : c.modes) {
      nf.mu[q] = c.mu;
      nf.h[q] = c.h;
      nf.g[q] = c.g;
      nf.eta[q] = c.eta;
    }
  }
  nf.hyperbolic_order = channels_by_decreasing_eta(cd);
  nf.eta_hat = frame_exponents(cd);

  const Vec half_mu = nf.mu / 2.0;
  const Vec hinv = nf.h.cwiseInverse();
  nf.mh = nf.m * nf.h.asDiagonal();

  nf.M = Mat::Zero(2 * L, 2 * L);
  nf.M.topLeftCorner(L, L) = nf.mh;
  nf.M.bottomLeftCorner(L, L) = nf.m * half_mu.cwiseProduct(nf.h).asDiagonal();
  nf.M.bottomRightCorner(L, L) = nf.m * hinv.asDiagonal();

  const Mat mt = nf.m.transpose();
  nf.M_inv = Mat::Zero(2 * L, 2 * L);
  nf.M_inv.topLeftCorner(L, L) = hinv.asDiagonal() * mt;
  nf.M_inv.bottomLeftCorner(L, L) = Vec(-half_mu.cwiseProduct(nf.h)).asDiagonal() * mt;
  nf.M_inv.bottomRightCorner(L, L) = nf.h.asDiagonal() * mt;

  nf.ra = half_mu;
  nf.rb = -nf.h.array().square().inverse().matrix();
  nf.rc = (nf.h.array().square() * (1.0 - half_mu.array().square())).matrix();
  nf.R = Mat::Zero(2 * L, 2 * L);
  nf.R.topLeftCorner(L, L).diagonal() = nf.ra;
  nf.R.topRightCorner(L, L).diagonal() = nf.rb;
  nf.R.bottomLeftCorner(L, L).diagonal() = nf.rc;
  nf.R.bottomRightCorner(L, L).diagonal() = nf.ra;

  const CMat dH = nf.d.adjoint();
  const CMat dT = nf.d.transpose();
  const cplx I(0.0, 1.0);
  const double r2 = 1.0 / std::sqrt(2.0);
  nf.W.resize(2 * L, 2 * L);
  nf.W.topLeftCorner(L, L) = r2 * dH;
  nf.W.topRightCorner(L, L) = r2 * dT;
  nf.W.bottomLeftCorner(L, L) = (-I * r2) * (nf.g.asDiagonal() * dH);
  nf.W.bottomRightCorner(L, L) = (I * r2) * (nf.g.asDiagonal() * dT);
  const CMat WH = nf.W.adjoint();
  nf.WH_re = WH.real();
  nf.WH_im = WH.imag();

  nf.R_eigenvalues.resize(2 * L);
  for (int q = 0; q < L; ++q) {
    const auto& c = cd[nf.mode_channel[static_cast<std::size_t>(q)]];
    if (c.elliptic()) {
      nf.R_eigenvalues[q] = std::polar(1.0, c.eta);
      nf.R_eigenvalues[q + L] = std::polar(1.0, -c.eta);
    } else {
      nf.R_eigenvalues[q] = c.sign * std::exp(c.eta);
      nf.R_eigenvalues[q + L] = c.sign * std::exp(-c.eta);
    }
  }

  nf.projections.resize(cd.channels.size());
  for (const auto& c : cd.channels) {
    for (int s = 0; s < 2; ++s) {
      CMat pi = CMat::Zero(2 * L, 2 * L);
      for (int q : c.modes) {
        const auto col = nf.W.col(q + s * L);
        pi += col * col.adjoint();
      }
      nf.projections[static_cast<std::size_t>(c.index)][static_cast<std::size_t>(s)] = std::move(pi);
    }
  }

  // invariants
  const Mat J = symplectic_form(L);
  const Mat I2 = Mat::Identity(2 * L, 2 * L);
  const CMat Sc = nf.S.cast<cplx>();
  auto add = [&](std::string name, double v) { nf.residuals.push_back({std::move(name), v}); };
  add("m real", max_abs(Mat(fd.imag())));
  add("m orthogonal", max_abs(Mat(nf.m.transpose() * nf.m - Mat::Identity(L, L))));
  add("d unitary", max_abs(CMat(dH * nf.d - CMat::Identity(L, L))));
  add("d d^t = reflection", max_abs(CMat(nf.d * dT - Sc)));
  add("M symplectic", max_abs(Mat(nf.M.transpose() * J * nf.M - J)));
  add("M M_inv = 1", max_abs(Mat(nf.M * nf.M_inv - I2)));
  add("M_inv A M = R", max_abs(Mat(nf.M_inv * free_transfer(L, cd.energy) * nf.M - nf.R)));
  add("W^* W = 1", max_abs(CMat(WH * nf.W - CMat::Identity(2 * L, 2 * L))));
  {
    const CMat G = nf.g.asDiagonal();
    const CMat Gc = nf.g.conjugate().asDiagonal();
    CMat target(2 * L, 2 * L);
    target.topLeftCorner(L, L) = G + Gc;
    target.topRightCorner(L, L) = (Gc - G) * Sc;
    target.bottomLeftCorner(L, L) = (G - Gc) * Sc;
    target.bottomRightCorner(L, L) = -(G + Gc);
    target *= cplx(0.0, 0.5);
    add("W^* J W block form", max_abs(CMat(WH * J.cast<cplx>() * nf.W - target)));
  }
  add("R W = W Lambda",
      max_abs(CMat(nf.R.cast<cplx>() * nf.W - nf.W * nf.R_eigenvalues.asDiagonal())) /
          std::max(1.0, nf.R_eigenvalues.cwiseAbs().maxCoeff()));
  {
    CMat sum = CMat::Zero(2 * L, 2 * L);
    double idem = 0.0;
    double cross = 0.0;
    double rank = 0.0;
    const int nch = nf.channels();
    for (int j = 0; j < nch; ++j)
      for (int s = 0; s < 2; ++s) {
        const CMat& pj = nf.projections[static_cast<std::size_t>(j)][static_cast<std::size_t>(s)];
        sum += pj;
        idem = std::max(idem, max_abs(CMat(pj * pj - pj)));
        rank = std::max(rank, std::abs(pj.trace() - static_cast<double>(nf.nu[static_cast<std::size_t>(j)])));
        for (int k = 0; k < nch; ++k)
          for (int t = 0; t < 2; ++t) {
            if (j == k && s == t) continue;
            const CMat& pk = nf.projections[static_cast<std::size_t>(k)][static_cast<std::size_t>(t)];
            cross = std::max(cross, max_abs(CMat(pj * pk)));
          }
      }
    add("sum of projections = 1", max_abs(CMat(sum - CMat::Identity(2 * L, 2 * L))));
    add("projections idempotent", idem);
    add("projection ranks", rank);
    add("projections mutually orthogonal", cross);
  }
  for (const auto& r : nf.residuals)
    if (!(r.value <= kNormalFormTol))
      throw NumericalDegeneracy("normal form invariant '" + r.name + "' residual " + std::to_string(r.value));
  return nf;
}

inline NormalFormData build_normal_form(int L, double E) { return build_normal_form(channel_spectrum(L, E)); }

struct FourierPotential {
  CVec vhat;  // vhat(k) = (1/L) Σ_s v(s) exp(2πisk/L)
  CMat Vhat;  // Vhat(a,b) = vhat(b - a)

  cplx operator()(long k) const {
    const long L = vhat.size();
    return vhat[((k % L) + L) % L];
  }
};

inline FourierPotential fourier_potential(const Vec& column) {
  const int L = static_cast<int>(column.size());
  FourierPotential fp;
  fp.vhat = CVec::Zero(L);
  for (int k = 0; k < L; ++k) {
    cplx s = 0.0;
    for (int site = 0; site < L; ++site)
      s += column[site] * std::polar(1.0, 2.0 * std::numbers::pi * ((static_cast<long>(site) * k) % L) / L);
    fp.vhat[k] = s / static_cast<double>(L);
  }
  fp.Vhat.resize(L, L);
  for (int a = 0; a < L; ++a)
    for (int b = 0; b < L; ++b) fp.Vhat(a, b) = fp(b - a);
  return fp;
}

struct PerturbationMatrix {
  Mat P;       // M_inv T M = R (1 - λ P)
  Mat Ptilde;  // P + P^t
  double consistency_residual = 0.0;
};

/// Lower-left block of P: h m^t V m h.
inline Mat perturbation_block(const NormalFormData& nf, const Vec& column) {
  return nf.mh.transpose() * column.asDiagonal() * nf.mh;
}

inline PerturbationMatrix build_P(const NormalFormData& nf, const Vec& column, double lambda) {
  const int L = nf.L;
  if (column.size() != L) throw InvalidArgument("build_P: column length differs from width");
  PerturbationMatrix pm;
  pm.P = Mat::Zero(2 * L, 2 * L);
  pm.P.bottomLeftCorner(L, L) = perturbation_block(nf, column);
  pm.Ptilde = pm.P + pm.P.transpose();

  StripModel model;
  model.width = L;
  model.energy = nf.energy;
  model.coupling = lambda;
  const Mat T = build_transfer(model, column);
  const Mat lhs = nf.M_inv * T * nf.M;
  const Mat rhs = nf.R * (Mat::Identity(2 * L, 2 * L) - lambda * pm.P);
  pm.consistency_residual = max_abs(Mat(lhs - rhs)) / std::max(1.0, max_abs(lhs));
  if (!(pm.consistency_residual <= kNormalFormTol))
    throw NumericalDegeneracy("normal form of T violated, residual " + std::to_string(pm.consistency_residual));
  return pm;
}

/// Closed form of <w_l^tau | P | w_k^sigma> for Fourier modes l, k.
inline cplx perturbation_element(const NormalFormData& nf, const FourierPotential& fp, int l, int k,
                                 int tau, int sigma) {
  return static_cast<double>(tau) * cplx(0.0, 0.5) * std::conj(nf.g[l]) * nf.h[l] * nf.h[k] *
         fp(static_cast<long>(sigma) * k - static_cast<long>(tau) * l);
}

/// Closed form of <w_l^tau | P^* | w_k^sigma>.
inline cplx perturbation_adjoint_element(const NormalFormData& nf, const FourierPotential& fp, int l, int k,
                                         int tau, int sigma) {
  return -static_cast<double>(sigma) * cplx(0.0, 0.5) * nf.g[k] * nf.h[l] * nf.h[k] *
         fp(static_cast<long>(sigma) * k - static_cast<long>(tau) * l);
}

enum class MomentItem { i, ii, iii, iv, v };

inline std::string_view to_string(MomentItem it) {
  switch (it) {
    case MomentItem::i: return "i";
    case MomentItem::ii: return "ii";
    case MomentItem::iii: return "iii";
    case MomentItem::iv: return "iv";
    case MomentItem::v: return "v";
  }
  return "?";
}

/// Pairs of channels whose Fourier modes alias onto each other under the
/// half-period shift. The channel-averaged moments only hold off this set.
inline bool moment_aliasing(const ChannelData& cd, int l, int k) {
  const auto& a = cd[l];
  const auto& b = cd[k];
  if (l == k) return a.nu == 2;
  const int L = cd.width;
  if (L % 2 != 0 || (a.nu == 1 && b.nu == 1)) return false;
  const int half = L / 2;
  for (int q : a.modes)
    for (int p : b.modes)
      if ((q + p) % L == half || ((q - p) % L + L) % L == half) return true;
  return false;
}

/// Expectation over the disorder of the Lemma-type matrix-element products
/// for unit vectors in the ranges of π_l^τ and π_k^σ. Item i is 0.
inline cplx moment_target(const ChannelData& cd, MomentItem item, int l, int k, int tau, int sigma) {
  if (l < 0 || l >= cd.count() || k < 0 || k >= cd.count())
    throw InvalidArgument("moment_target: channel index out of range");
  const double L = cd.width;
  const double hl2 = cd[l].h2();
  const double hk2 = cd[k].h2();
  switch (item) {
    case MomentItem::i:
      return 0.0;
    case MomentItem::ii:
    case MomentItem::iii:
      if (l == k && tau == sigma) throw InvalidCase("moment_target: diagonal case l = k, tau = sigma is excluded");
      if (moment_aliasing(cd, l, k)) throw InvalidCase("moment_target: channels alias, no channel-averaged value");
      if (item == MomentItem::ii)
        return -static_cast<double>(tau * sigma) / (4.0 * L) * std::conj(cd[l].g * cd[k].g) * hl2 * hk2;
      return hl2 * hk2 / (4.0 * L);
    case MomentItem::iv:
      if (!cd[l].elliptic() || !cd[k].elliptic()) throw InvalidCase("moment_target: item iv needs elliptic channels");
      if (moment_aliasing(cd, l, k)) throw InvalidCase("moment_target: channels alias, no channel-averaged value");
      return hl2 * hk2 / L;
    case MomentItem::v:
      return 0.5 * cd.h_av_sq * hl2;
  }
  return 0.0;
}

/// (u, Ju) for an L-frame u; orthogonal and symplectic when u is Lagrangian.
inline Mat unitary_embedding(const Mat& u) {
  const int L = static_cast<int>(u.rows()) / 2;
  Mat out(2 * L, 2 * u.cols());
  out.leftCols(u.cols()) = u;
  out.rightCols(u.cols()) = symplectic_form(L) * u;
  return out;
}

/// |(1 + σ_j σ_k) <v_j|Π|v_k> - δ_jk| for Π the projection onto a
/// Lagrangian frame and v_j, v_k orthonormal with J v = iσ v.
inline double lagrangian_defect(const Mat& u, const CVec& vj, int sj, const CVec& vk, int sk, bool same) {
  const CVec a = u.transpose().cast<cplx>() * vk;
  const CVec b = u.transpose().cast<cplx>() * vj;
  const cplx val = static_cast<double>(1 + sj * sk) * b.dot(a);
  return std::abs(val - (same ? 1.0 : 0.0));
}

}  // namespace striplyap
