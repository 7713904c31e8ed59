#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "model.hpp"

namespace striplyap {

enum class ChannelKind { elliptic, hyperbolic };

inline std::string_view to_string(ChannelKind k) {
  return k == ChannelKind::elliptic ? "elliptic" : "hyperbolic";
}

inline constexpr double kParabolicTol = 1e-9;

/// One eigenvalue pair of the free transfer matrix. Fourier modes are
/// 0-based; mode 0 is the constant mode.
struct Channel {
  int index = 0;
  double mu = 0.0;
  ChannelKind kind = ChannelKind::elliptic;
  double eta = 0.0;
  cplx g{1.0, 0.0};
  double h = 1.0;
  int nu = 1;
  std::vector<int> modes;
  // sign of mu on hyperbolic channels, +1 on elliptic ones
  int sign = 1;

  bool elliptic() const { return kind == ChannelKind::elliptic; }
  bool hyperbolic() const { return kind == ChannelKind::hyperbolic; }
  double h2() const { return h * h; }
};

struct ChannelData {
  int width = 1;
  double energy = 0.0;
  std::vector<Channel> channels;
  std::vector<int> hyperbolic;   // channel indices
  std::vector<int> mode_channel;  // Fourier mode -> channel
  int L_c = 0;
  int L_h = -1;
  double h_av_sq = 1.0;

  int count() const { return static_cast<int>(channels.size()); }
  const Channel& operator[](int j) const { return channels[static_cast<std::size_t>(j)]; }
  bool all_elliptic() const { return hyperbolic.empty(); }
  int hyperbolic_dimension() const {
    int n = 0;
    for (int j : hyperbolic) n += channels[static_cast<std::size_t>(j)].nu;
    return n;
  }
};

inline std::vector<int> channel_modes(int L, int j) {
  if (j == 0) return {0};
  if (2 * j == L) return {j};
  return {j, L - j};
}

/// acosh(x) for x >= 1, accurate near 1.
inline double acosh_near_one(double x) {
  const double t = x - 1.0;
  return std::log1p(t + std::sqrt(t * (x + 1.0)));
}

inline double h_av_squared(const ChannelData& cd) {
  double s = 0.0;
  for (const auto& c : cd.channels) {
    const double boost = c.hyperbolic() ? std::cosh(2.0 * c.eta) : 1.0;
    s += c.nu * c.h2() * boost;
  }
  return s / cd.width;
}

inline ChannelData channel_spectrum(int L, double E) {
  if (L < 1) throw InvalidArgument("channel_spectrum: L must be >= 1");
  if (!std::isfinite(E)) throw InvalidArgument("channel_spectrum: energy must be finite");
  ChannelData cd;
  cd.width = L;
  cd.energy = E;
  cd.L_c = L / 2;
  cd.mode_channel.assign(static_cast<std::size_t>(L), 0);
  for (int j = 0; j <= cd.L_c; ++j) {
    Channel c;
    c.index = j;
    c.modes = channel_modes(L, j);
    c.nu = static_cast<int>(c.modes.size());
    c.mu = laplacian_eigenvalue(L, j) - E;
    const double a = std::abs(c.mu) / 2.0;
    if (std::abs(std::abs(c.mu) - 2.0) <= kParabolicTol) throw ParabolicChannel(j, c.mu);
    if (a < 1.0) {
      c.kind = ChannelKind::elliptic;
      const double s = std::sqrt((1.0 - c.mu / 2.0) * (1.0 + c.mu / 2.0));
      c.eta = std::atan2(s, c.mu / 2.0);
      c.h = 1.0 / std::sqrt(s);
      c.g = {1.0, 0.0};
      c.sign = 1;
    } else {
      c.kind = ChannelKind::hyperbolic;
      c.eta = acosh_near_one(a);
      c.h = 1.0 / std::sqrt(std::sqrt((a - 1.0) * (a + 1.0)));
      c.sign = c.mu > 0 ? 1 : -1;
      c.g = {0.0, -static_cast<double>(c.sign)};
      cd.hyperbolic.push_back(j);
    }
    for (int q : c.modes) cd.mode_channel[static_cast<std::size_t>(q)] = j;
    cd.channels.push_back(std::move(c));
  }
  cd.L_h = static_cast<int>(cd.hyperbolic.size()) - 1;
  cd.h_av_sq = h_av_squared(cd);
  return cd;
}

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double x) const { return x >= lo && x <= hi; }
};

/// Spectrum of the free strip operator.
inline Interval free_spectrum_interval(int L) {
  if (L < 1) throw InvalidArgument("free_spectrum_interval: L must be >= 1");
  double lo = laplacian_eigenvalue(L, 0);
  double hi = lo;
  for (int q = 1; q < L; ++q) {
    lo = std::min(lo, laplacian_eigenvalue(L, q));
    hi = std::max(hi, laplacian_eigenvalue(L, q));
  }
  return {lo - 2.0, hi + 2.0};
}

struct PhaseRelation {
  // pair relations use (k, j) and leave l = m = -1
  int k = -1;
  int l = -1;
  int m = -1;
  int j = -1;
  int sigma = 1;
  double residual = 0.0;
  bool quadruple() const { return l >= 0; }
  std::string describe() const {
    const char* s = sigma > 0 ? "+" : "-";
    if (!quadruple())
      return "eta_" + std::to_string(k) + " " + s + " eta_" + std::to_string(j);
    return "eta_" + std::to_string(k) + " + eta_" + std::to_string(l) + " " + s + " (eta_" +
           std::to_string(m) + " + eta_" + std::to_string(j) + ")";
  }
};

struct HypothesisReport {
  bool satisfied = true;
  double tolerance = 1e-6;
  double warn_tolerance = 1e-3;
  std::vector<PhaseRelation> violations;
  std::vector<PhaseRelation> warnings;
  double min_residual = 2.0;
};

/// Non-resonance of the elliptic rotation phases. Phase sums range over
/// the elliptic channels; a relation is violated when |exp(iθ) - 1| < tol.
inline HypothesisReport check_main_hypothesis(const ChannelData& cd, double tol = 1e-6,
                                              double warn_tol = 1e-3) {
  HypothesisReport rep;
  rep.tolerance = tol;
  rep.warn_tolerance = warn_tol;
  std::vector<int> ids;
  for (const auto& c : cd.channels)
    if (c.elliptic()) ids.push_back(c.index);
  auto eta = [&](int i) { return cd[i].eta; };
  auto record = [&](PhaseRelation r, double theta) {
    r.residual = 2.0 * std::abs(std::sin(theta / 2.0));
    rep.min_residual = std::min(rep.min_residual, r.residual);
    if (r.residual < tol)
      rep.violations.push_back(r);
    else if (r.residual < warn_tol)
      rep.warnings.push_back(r);
  };
  for (int sigma : {1, -1}) {
    for (int k : ids)
      for (int j : ids) {
        if (sigma < 0 && j == k) continue;
        record({k, -1, -1, j, sigma, 0.0}, eta(k) + sigma * eta(j));
      }
    for (int k : ids)
      for (int l : ids)
        for (int m : ids)
          for (int j : ids) {
            if (sigma < 0 && std::minmax(k, l) == std::minmax(m, j)) continue;
            record({k, l, m, j, sigma, 0.0}, eta(k) + eta(l) + sigma * (eta(m) + eta(j)));
          }
  }
  rep.satisfied = rep.violations.empty();
  return rep;
}

}  // namespace striplyap
