#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "errors.hpp"
#include "frames.hpp"
#include "model.hpp"
#include "spectral.hpp"

namespace striplyap {

inline Vec channel_h2(const ChannelData& cd) {
  Vec h2(cd.count());
  for (int j = 0; j < cd.count(); ++j) h2[j] = cd[j].h2();
  return h2;
}

/// Σ_{j,k} h_j^2 h_k^2 (2 - δ_jk) C_jk.
inline double weighted_pair_sum(const Vec& h2, const Mat& C) {
  if (C.rows() != h2.size() || C.cols() != h2.size()) throw InvalidArgument("weighted_pair_sum: shape mismatch");
  const Mat w = h2 * h2.transpose();
  return 2.0 * w.cwiseProduct(C).sum() - w.diagonal().dot(C.diagonal());
}

/// Bottom exponent from the second moments <rho_{L,j} rho_{L,k}>.
inline double gamma_bottom_formula(const ChannelData& cd, const Mat& second_last, double lambda) {
  return lambda * lambda / (8.0 * cd.width) * weighted_pair_sum(channel_h2(cd), second_last);
}

inline double gamma_bottom_formula(const ChannelData& cd, const WeightStats& stats, double lambda) {
  if (stats.samples() == 0) throw MissingMoments("gamma_bottom_formula: no weight statistics");
  if (stats.slots() != cd.width) throw MissingMoments("gamma_bottom_formula: needs a complete frame");
  return gamma_bottom_formula(cd, stats.second_last(), lambda);
}

inline double gamma_sum_formula(const ChannelData& cd, double lambda) {
  if (!cd.all_elliptic()) throw HyperbolicPresent("gamma_sum_formula: all channels must be elliptic");
  return cd.width * lambda * lambda / 8.0 * cd.h_av_sq * cd.h_av_sq;
}

/// Top exponent from <rho_{1,j}> and <rho_{1,j} rho_{1,k}>.
inline double gamma_top_formula(const ChannelData& cd, const Vec& first, const Mat& second_first, double lambda) {
  const Vec h2 = channel_h2(cd);
  if (first.size() != h2.size()) throw InvalidArgument("gamma_top_formula: shape mismatch");
  return lambda * lambda / 4.0 *
         (cd.h_av_sq * h2.dot(first) - weighted_pair_sum(h2, second_first) / (2.0 * cd.width));
}

inline double gamma_top_formula(const ChannelData& cd, const WeightStats& stats, double lambda) {
  if (stats.samples() == 0) throw MissingMoments("gamma_top_formula: no weight statistics");
  return gamma_top_formula(cd, Vec(stats.first().row(0).transpose()), stats.second_first(), lambda);
}

struct BottomBounds {
  double lower_bulk = 0.0;
  std::optional<double> lower_edge;
  std::optional<double> band_edge;
  std::optional<double> epsilon;
};

/// Lower bounds λ²/(8L) and, near a band edge E_b, λ²/(8L|ε|) with ε = E - E_b.
/// Without an explicit edge the nearer end of the free spectrum is used.
inline BottomBounds gamma_bottom_bounds(const ChannelData& cd, double lambda, std::optional<double> band_edge = {}) {
  const Interval spec = free_spectrum_interval(cd.width);
  const double E = cd.energy;
  if (!spec.contains(E)) throw OutsideSpectrum("energy " + std::to_string(E) + " outside the free spectrum");
  BottomBounds b;
  b.lower_bulk = lambda * lambda / (8.0 * cd.width);
  const double edge = band_edge ? *band_edge : (E - spec.lo < spec.hi - E ? spec.lo : spec.hi);
  const double eps = E - edge;
  if (eps == 0.0) throw OutsideSpectrum("energy sits on the band edge");
  b.band_edge = edge;
  b.epsilon = eps;
  b.lower_edge = b.lower_bulk / std::abs(eps);
  return b;
}

struct MeanFieldWeights {
  Vec rho1;  // per channel
  double Z = 0.0;
  double normalization_residual = 0.0;
  double fixed_point_residual = 0.0;
};

/// max_k |rho_k (Σ_m h_m^2 (1 - rho_m) + h_k^2) - h_k^2|, the closed
/// stationarity equations with factorized moments.
inline double meanfield_fixed_point_residual(const ChannelData& cd, const Vec& rho) {
  const Vec h2 = channel_h2(cd);
  const double s = h2.dot((1.0 - rho.array()).matrix());
  double r = 0.0;
  for (int k = 0; k < cd.count(); ++k) r = std::max(r, std::abs(rho[k] * (s + h2[k]) - h2[k]) / h2[k]);
  return r;
}

/// Solves Σ_k 1/(1 + Z sin η_k) = 1 for Z ≥ 0.
inline MeanFieldWeights meanfield_weights(const ChannelData& cd) {
  if (!cd.all_elliptic()) throw HyperbolicPresent("meanfield_weights: all channels must be elliptic");
  const int n = cd.count();
  Vec s(n);
  for (int k = 0; k < n; ++k) s[k] = std::sin(cd[k].eta);
  auto norm = [&](double Z) { return (1.0 / (1.0 + Z * s.array())).sum() - 1.0; };
  MeanFieldWeights mf;
  if (n == 1) {
    mf.Z = 0.0;
  } else {
    double lo = 0.0;
    double hi = 1.0;
    while (norm(hi) > 0.0) {
      lo = hi;
      hi *= 2.0;
      if (!std::isfinite(hi)) throw NumericalDegeneracy("meanfield_weights: no bracket");
    }
    // Newton steps safeguarded by the bracket
    double Z = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      const double f = norm(Z);
      if (f > 0.0)
        lo = Z;
      else
        hi = Z;
      if (std::abs(f) < 1e-15 || hi - lo <= 1e-15 * hi) break;
      const double df = -(s.array() / (1.0 + Z * s.array()).square()).sum();
      double next = Z - f / df;
      if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
      Z = next;
    }
    mf.Z = Z;
  }
  mf.rho1 = (1.0 / (1.0 + mf.Z * s.array())).matrix();
  mf.normalization_residual = std::abs(mf.rho1.sum() - 1.0);
  mf.fixed_point_residual = meanfield_fixed_point_residual(cd, mf.rho1);
  return mf;
}

struct MeanFieldResidual {
  Vec residual;  // per channel k
  Vec scale;     // largest absolute term per channel
  Mat terms;     // channel x 4
};

/// Stationarity of <rho_{1,k}> at order λ²: four-term combination of the
/// first, second and third moments of the slot-1 weights.
inline MeanFieldResidual meanfield_residual(const ChannelData& cd, const Vec& first, const Mat& second,
                                            const std::vector<double>& third) {
  const int n = cd.count();
  if (first.size() != n || second.rows() != n || static_cast<int>(third.size()) != n * n * n)
    throw MissingMoments("meanfield_residual: moments missing or misshaped");
  const Vec h2 = channel_h2(cd);
  const double c = 1.0 / (2.0 * cd.width);
  double nuh = 0.0;
  for (int m = 0; m < n; ++m) nuh += cd[m].nu * h2[m];
  MeanFieldResidual r;
  r.residual.resize(n);
  r.scale.resize(n);
  r.terms.resize(n, 4);
  auto t3 = [&](int l, int m, int k) { return third[static_cast<std::size_t>((l * n + m) * n + k)]; };
  for (int k = 0; k < n; ++k) {
    double a = 0.0, b = 0.0, d = 0.0, e = 0.0;
    for (int l = 0; l < n; ++l) {
      a += cd[k].nu * h2[k] * h2[l] * first[l];
      b += nuh * h2[l] * second(l, k);
      for (int m = 0; m < n; ++m) d += h2[l] * h2[m] * (l == m ? 1.0 : 2.0) * t3(l, m, k);
      e += h2[l] * h2[k] * (l == k ? 1.0 : 2.0) * second(l, k);
    }
    r.terms.row(k) << c * a, -c * b, c * d, -c * e;
    r.residual[k] = r.terms.row(k).sum();
    r.scale[k] = r.terms.row(k).cwiseAbs().maxCoeff();
  }
  return r;
}

inline MeanFieldResidual meanfield_residual(const ChannelData& cd, const WeightStats& stats) {
  if (!stats.has_third()) throw MissingMoments("meanfield_residual: third moments not tracked");
  const int n = cd.count();
  std::vector<double> third(static_cast<std::size_t>(n * n * n));
  for (int l = 0; l < n; ++l)
    for (int m = 0; m < n; ++m)
      for (int k = 0; k < n; ++k) third[static_cast<std::size_t>((l * n + m) * n + k)] = stats.third(l, m, k);
  return meanfield_residual(cd, Vec(stats.first().row(0).transpose()), stats.second_first(), third);
}

}  // namespace striplyap
