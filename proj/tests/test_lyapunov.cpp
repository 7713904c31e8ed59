#include <gtest/gtest.h>

#include <cmath>

#include "striplyap/lyapunov.hpp"
#include "striplyap/normalform.hpp"

using namespace striplyap;

namespace {

StripModel model(int L, double E, double lambda, std::uint64_t seed = 1) {
  StripModel m;
  m.width = L;
  m.energy = E;
  m.coupling = lambda;
  m.seed = seed;
  return m;
}

EstimateOptions quick(std::int64_t steps, int trajectories = 4) {
  EstimateOptions o;
  o.steps = steps;
  o.trajectories = trajectories;
  o.burn_in = 1000;
  return o;
}

}  // namespace

TEST(Estimate, FreeEllipticIsZero) {
  const SpectrumRun r = estimate_spectrum(model(13, -0.03, 0.0), quick(5000, 2));
  EXPECT_LT(r.estimate.gammas.cwiseAbs().maxCoeff(), 1e-13);
}

TEST(Estimate, FreeMixedGivesChannelExponents) {
  const ChannelData cd = channel_spectrum(13, 0.95);
  const SpectrumRun r = estimate_spectrum(model(13, 0.95, 0.0), quick(5000, 2));
  const Vec want = frame_exponents(cd);
  EXPECT_LT((r.estimate.gammas - want).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_NEAR(want[0], cd[0].eta, 0.0);
  EXPECT_NEAR(want[4], cd[2].eta, 0.0);
}

TEST(Estimate, SeedDeterminism) {
  const auto m = model(5, 0.2, 0.3, 42);
  const SpectrumRun a = estimate_spectrum(m, quick(20000));
  EstimateOptions serial = quick(20000);
  serial.threads = 1;
  const SpectrumRun b = estimate_spectrum(m, serial);
  EXPECT_EQ(a.estimate.gammas, b.estimate.gammas);
  EXPECT_EQ(a.estimate.stderrs, b.estimate.stderrs);
  EXPECT_EQ(a.weights.first(), b.weights.first());
  const SpectrumRun c = estimate_spectrum(model(5, 0.2, 0.3, 43), quick(20000));
  EXPECT_NE(a.estimate.gammas, c.estimate.gammas);
}

TEST(Estimate, OrderingAndPositivity) {
  const SpectrumRun r = estimate_spectrum(model(5, 0.2, 0.4), quick(100000));
  const auto& e = r.estimate;
  for (int p = 0; p + 1 < 5; ++p) EXPECT_GE(e.gammas[p] - e.gammas[p + 1], -2 * (e.stderrs[p] + e.stderrs[p + 1]));
  EXPECT_GE(e.bottom(), -2 * e.bottom_stderr());
  EXPECT_NEAR(e.partial_sums[4], e.gammas.sum(), 1e-12);
}

TEST(Estimate, RawTransferAgrees) {
  const auto m = model(4, 0.3, 0.5);
  EstimateOptions o = quick(100000);
  const SpectrumRun nf = estimate_spectrum(m, o);
  o.raw = true;
  o.track_weights = false;
  const SpectrumRun raw = estimate_spectrum(m, o);
  for (int p = 0; p < 4; ++p) {
    const double se = std::hypot(nf.estimate.stderrs[p], raw.estimate.stderrs[p]);
    EXPECT_LE(std::abs(nf.estimate.gammas[p] - raw.estimate.gammas[p]), 4 * se) << p;
  }
}

TEST(Estimate, ControlVariateIsUnbiased) {
  const auto m = model(3, 0.5, 0.3);
  EstimateOptions o = quick(200000);
  const SpectrumRun with = estimate_spectrum(m, o);
  o.control_variate = false;
  const SpectrumRun without = estimate_spectrum(m, o);
  for (int p = 0; p < 3; ++p) {
    const double se = std::hypot(with.estimate.stderrs[p], without.estimate.stderrs[p]);
    EXPECT_LE(std::abs(with.estimate.gammas[p] - without.estimate.gammas[p]), 4 * se);
    // the plain estimator is the one also reported as raw_gammas
    EXPECT_NEAR(without.estimate.raw_gammas[p], without.estimate.gammas[p], 1e-12);
  }
  EXPECT_LT(with.estimate.bottom_stderr(), without.estimate.bottom_stderr());
}

TEST(Estimate, PartialSumMatchesSpectrum) {
  const auto m = model(5, 0.2, 0.3);
  const SpectrumRun full = estimate_spectrum(m, quick(100000));
  for (int p : {1, 3, 5}) {
    const PartialSum ps = estimate_partial_sum(m, p, quick(100000));
    const double se = std::hypot(ps.stderr_value, full.estimate.partial_stderrs[p - 1]);
    EXPECT_LE(std::abs(ps.value - full.estimate.partial_sums[p - 1]), 3 * se + 1e-12) << p;
  }
  EXPECT_THROW(estimate_partial_sum(m, 0), InvalidArgument);
  EXPECT_THROW(estimate_partial_sum(m, 6), InvalidArgument);
  EXPECT_NEAR(estimate_partial_sum(model(13, -0.03, 0.0), 13, quick(3000, 1)).value, 0.0, 1e-13);
}

TEST(Estimate, LambdaSquaredScaling) {
  const SpectrumRun a = estimate_spectrum(model(5, 0.2, 0.1), quick(400000, 4));
  const SpectrumRun b = estimate_spectrum(model(5, 0.2, 0.05), quick(400000, 4));
  const double ra = a.estimate.bottom() / 0.01, rb = b.estimate.bottom() / 0.0025;
  const double rel = std::hypot(a.estimate.bottom_stderr() / a.estimate.bottom(),
                                b.estimate.bottom_stderr() / b.estimate.bottom());
  EXPECT_LE(std::abs(ra - rb) / rb, 0.25 + 3 * rel);
}

TEST(Estimate, DefaultBurnIn) {
  EXPECT_EQ(default_burn_in(0.0), 1000);
  EXPECT_EQ(default_burn_in(0.5), 1000);
  EXPECT_EQ(default_burn_in(0.05), 4000);
  EXPECT_EQ(default_burn_in(0.01), 100000);
}

TEST(Estimate, ParabolicPropagates) { EXPECT_THROW(estimate_spectrum(model(4, 0.0, 0.1)), ParabolicChannel); }
