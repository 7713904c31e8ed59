#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "striplyap/normalform.hpp"
#include "striplyap/spectral.hpp"

using namespace striplyap;

TEST(Channels, DegeneracySum) {
  for (int L = 1; L <= 64; ++L) {
    const double E = 0.0137;  // generic energy, no parabolic channel
    const ChannelData cd = channel_spectrum(L, E);
    int total = 0;
    for (const auto& c : cd.channels) total += c.nu;
    EXPECT_EQ(total, L);
    EXPECT_EQ(cd.L_c, L / 2);
    EXPECT_EQ(cd[0].nu, 1);
    if (L % 2 == 0 && L > 1) EXPECT_EQ(cd[L / 2].nu, 1);
  }
}

TEST(Channels, PhaseAndHyperbolicConsistency) {
  for (int L : {1, 2, 3, 5, 8, 13, 21}) {
    for (double E : {-3.1, -0.03, 0.41, 0.95, 2.7}) {
      ChannelData cd;
      try {
        cd = channel_spectrum(L, E);
      } catch (const ParabolicChannel&) {
        continue;
      }
      for (const auto& c : cd.channels) {
        if (c.elliptic()) {
          EXPECT_GT(c.eta, 0.0);
          EXPECT_LT(c.eta, std::numbers::pi);
          EXPECT_LE(std::abs(2.0 * std::cos(c.eta) - c.mu), 1e-12);
          EXPECT_NEAR(c.h, 1.0 / std::sqrt(std::sin(c.eta)), 1e-12);
          EXPECT_GE(c.h, 1.0);
          EXPECT_EQ(c.g, cplx(1.0, 0.0));
        } else {
          EXPECT_LE(std::abs(2.0 * std::cosh(c.eta) - std::abs(c.mu)), 1e-12);
          EXPECT_NEAR(c.h, 1.0 / std::sqrt(std::sinh(c.eta)), 1e-12);
          EXPECT_NEAR(std::abs(c.g), 1.0, 1e-15);
        }
        EXPECT_GT(c.h, 0.0);
      }
    }
  }
}

TEST(Channels, FreeTransferEigenvalues) {
  // channel phases against a general eigensolver of the free transfer matrix
  for (double E : {-0.03, 0.95}) {
    const ChannelData cd = channel_spectrum(13, E);
    Eigen::EigenSolver<Mat> es(free_transfer(13, E));
    std::vector<cplx> got(es.eigenvalues().data(), es.eigenvalues().data() + 26);
    std::vector<cplx> want;
    for (const auto& c : cd.channels)
      for (int i = 0; i < c.nu; ++i) {
        if (c.elliptic()) {
          want.push_back(std::polar(1.0, c.eta));
          want.push_back(std::polar(1.0, -c.eta));
        } else {
          want.push_back(c.sign * std::exp(c.eta));
          want.push_back(c.sign * std::exp(-c.eta));
        }
      }
    ASSERT_EQ(got.size(), want.size());
    // greedy nearest matching; the spectrum has exact double degeneracies
    std::vector<bool> used(got.size(), false);
    for (const cplx w : want) {
      std::size_t best = 0;
      double dist = INFINITY;
      for (std::size_t i = 0; i < got.size(); ++i)
        if (!used[i] && std::abs(got[i] - w) < dist) dist = std::abs(got[i] - w), best = i;
      used[best] = true;
      EXPECT_LT(dist, 1e-9) << E << " " << w;
    }
  }
}

TEST(Channels, MixedAtWidth13) {
  const ChannelData cd = channel_spectrum(13, 0.95);
  EXPECT_EQ(cd.hyperbolic, (std::vector<int>{0, 1, 2}));
  EXPECT_EQ(cd.L_h, 2);
  EXPECT_EQ(cd.hyperbolic_dimension(), 5);
  for (int j = 3; j <= 6; ++j) EXPECT_TRUE(cd[j].elliptic());
  EXPECT_EQ(cd[1].modes, (std::vector<int>{1, 12}));
  EXPECT_EQ(cd[2].modes, (std::vector<int>{2, 11}));
}

TEST(Channels, AllEllipticAtWidth13) {
  const ChannelData cd = channel_spectrum(13, -0.03);
  EXPECT_TRUE(cd.all_elliptic());
  EXPECT_EQ(cd.count(), 7);
}

TEST(Channels, ParabolicRejected) {
  EXPECT_THROW(channel_spectrum(4, 0.0), ParabolicChannel);
  try {
    channel_spectrum(4, 0.0);
  } catch (const ParabolicChannel& e) {
    EXPECT_NEAR(std::abs(e.mu()), 2.0, 1e-12);
  }
  EXPECT_THROW(channel_spectrum(1, 2.0 + 1e-10), ParabolicChannel);
  EXPECT_NO_THROW(channel_spectrum(1, 2.0 + 1e-6));
}

TEST(Channels, HyperbolicBeyondPlusTwo) {
  // μ > 2 on the constant mode at E < -4
  const ChannelData cd = channel_spectrum(3, -4.5);
  EXPECT_TRUE(cd[0].hyperbolic());
  EXPECT_EQ(cd[0].sign, 1);
  EXPECT_TRUE(cd[1].hyperbolic());
}

TEST(Channels, AcoshNearOne) {
  for (double x : {1.0 + 1e-12, 1.0 + 1e-6, 1.3, 7.0}) EXPECT_NEAR(acosh_near_one(x), std::acosh(x), 1e-12 * (1 + std::acosh(x)));
}

TEST(Spectrum, Interval) {
  auto iv = free_spectrum_interval(4);
  EXPECT_DOUBLE_EQ(iv.lo, -4.0);
  EXPECT_DOUBLE_EQ(iv.hi, 4.0);
  iv = free_spectrum_interval(3);
  EXPECT_NEAR(iv.lo, -4.0, 1e-15);
  EXPECT_NEAR(iv.hi, 3.0, 1e-14);
  iv = free_spectrum_interval(13);
  EXPECT_NEAR(iv.hi, 2.0 + 2.0 * std::cos(std::numbers::pi / 13), 1e-14);
  for (int L = 3; L < 40; L += 2) EXPECT_NEAR(free_spectrum_interval(L).hi, 2 + 2 * std::cos(std::numbers::pi / L), 1e-13);
}

TEST(HAv, SingleChannel) {
  const ChannelData cd = channel_spectrum(1, 0.0);
  EXPECT_NEAR(cd[0].eta, std::numbers::pi / 2, 1e-15);
  EXPECT_NEAR(cd.h_av_sq, 1.0, 1e-15);
}

TEST(HAv, SummedOverFourierModes) {
  for (double E : {-0.03, 0.95}) {
    const ChannelData cd = channel_spectrum(13, E);
    // independent evaluation mode by mode
    double s = 0.0;
    for (int q = 0; q < 13; ++q) {
      const double mu = -2.0 * std::cos(2.0 * std::numbers::pi * q / 13) - E;
      if (std::abs(mu) < 2.0) {
        s += 1.0 / std::sqrt(1.0 - mu * mu / 4.0);
      } else {
        const double eta = std::acosh(std::abs(mu) / 2.0);
        s += std::cosh(2.0 * eta) / std::sinh(eta);
      }
    }
    EXPECT_NEAR(cd.h_av_sq, s / 13.0, 1e-12);
  }
}

TEST(BandEdge, SlowChannelEnhancement) {
  for (int L : {5, 13, 21}) {
    const double Eb = 2.0 + 2.0 * std::cos(std::numbers::pi / L);
    for (double eps : {1e-2, 1e-3, 1e-4}) {
      const ChannelData cd = channel_spectrum(L, Eb - eps);
      EXPECT_GE(cd[cd.L_c].h2(), std::pow(eps, -0.5));
    }
  }
}

TEST(Hypothesis, SatisfiedAtWidth13) {
  const ChannelData cd = channel_spectrum(13, -0.03);
  const HypothesisReport r = check_main_hypothesis(cd, 1e-6);
  EXPECT_TRUE(r.satisfied);
  EXPECT_TRUE(r.violations.empty());

  // brute force over all phase sums with an independent loop
  double smallest = 10.0;
  const int n = cd.count();
  for (int sigma : {1, -1})
    for (int k = 0; k < n; ++k)
      for (int l = 0; l < n; ++l)
        for (int m = 0; m < n; ++m)
          for (int j = 0; j < n; ++j) {
            if (sigma < 0 && ((k == m && l == j) || (k == j && l == m))) continue;
            const double th = cd[k].eta + cd[l].eta + sigma * (cd[m].eta + cd[j].eta);
            smallest = std::min(smallest, std::abs(std::exp(cplx(0, th)) - 1.0));
          }
  for (int sigma : {1, -1})
    for (int k = 0; k < n; ++k)
      for (int j = 0; j < n; ++j) {
        if (sigma < 0 && j == k) continue;
        smallest = std::min(smallest, std::abs(std::exp(cplx(0, cd[k].eta + sigma * cd[j].eta)) - 1.0));
      }
  EXPECT_NEAR(r.min_residual, smallest, 1e-12);
  EXPECT_GT(smallest, 1e-6);
}

TEST(Hypothesis, ResonantPairDetected) {
  // L = 2: bisect for the energy where η_0 + η_1 = π, so that the quadruple
  // (0,1,0,1) with σ = +1 resonates
  auto phase = [](double E) {
    const ChannelData cd = channel_spectrum(2, E);
    return cd[0].eta + cd[1].eta - std::numbers::pi;
  };
  double lo = -0.5, hi = 0.5;
  ASSERT_LT(phase(lo) * phase(hi), 0.0);
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    (phase(mid) * phase(lo) > 0 ? lo : hi) = mid;
  }
  const ChannelData cd = channel_spectrum(2, 0.5 * (lo + hi));
  const HypothesisReport r = check_main_hypothesis(cd, 1e-6);
  EXPECT_FALSE(r.satisfied);
  bool found = false;
  for (const auto& v : r.violations)
    if (v.quadruple() && v.sigma == 1 && std::minmax(v.k, v.l) == std::minmax(0, 1) &&
        std::minmax(v.m, v.j) == std::minmax(0, 1))
      found = true;
  EXPECT_TRUE(found);
  EXPECT_TRUE(check_main_hypothesis(channel_spectrum(2, 0.3), 1e-6).satisfied);
}

TEST(Hypothesis, ExcludedCasesNeverViolate) {
  for (double E : {-0.03, 0.3, 1.1}) {
    const ChannelData cd = channel_spectrum(9, E);
    const HypothesisReport r = check_main_hypothesis(cd, 1e-6, 1e-6);
    for (const auto& v : r.violations) {
      if (v.sigma > 0) continue;
      if (!v.quadruple()) EXPECT_NE(v.k, v.j);
      else EXPECT_NE(std::minmax(v.k, v.l), std::minmax(v.m, v.j));
    }
  }
}

TEST(Hypothesis, PermutationSymmetric) {
  const ChannelData cd = channel_spectrum(11, 0.21);
  const HypothesisReport r = check_main_hypothesis(cd, 1e-3, 1e-3);
  auto has = [&](int k, int l, int m, int j, int s) {
    for (const auto& v : r.violations)
      if (v.k == k && v.l == l && v.m == m && v.j == j && v.sigma == s) return true;
    return false;
  };
  for (const auto& v : r.violations) {
    if (!v.quadruple()) continue;
    EXPECT_TRUE(has(v.l, v.k, v.m, v.j, v.sigma));
    EXPECT_TRUE(has(v.k, v.l, v.j, v.m, v.sigma));
  }
}

TEST(Hypothesis, OnlyEllipticPhases) {
  const ChannelData cd = channel_spectrum(13, 0.95);
  const HypothesisReport r = check_main_hypothesis(cd, 1.0, 1.0);
  for (const auto& v : r.violations) {
    for (int i : {v.k, v.j}) EXPECT_TRUE(cd[i].elliptic());
  }
}
