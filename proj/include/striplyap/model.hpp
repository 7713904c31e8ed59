#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>

#include <Eigen/Dense>

#include "errors.hpp"
#include "rng.hpp"

namespace striplyap {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using cplx = std::complex<double>;

enum class DisorderKind { rademacher, uniform, gaussian };

inline std::string_view to_string(DisorderKind k) {
  switch (k) {
    case DisorderKind::rademacher: return "rademacher";
    case DisorderKind::uniform: return "uniform";
    case DisorderKind::gaussian: return "gaussian";
  }
  return "?";
}

inline DisorderKind parse_disorder(std::string_view s) {
  if (s == "rademacher") return DisorderKind::rademacher;
  if (s == "uniform") return DisorderKind::uniform;
  if (s == "gaussian") return DisorderKind::gaussian;
  throw InvalidArgument("unknown disorder law '" + std::string(s) + "'");
}

struct StripModel {
  int width = 1;
  double energy = 0.0;
  double coupling = 0.0;
  DisorderKind disorder = DisorderKind::rademacher;
  std::uint64_t seed = 0;

  void validate() const {
    if (width < 1) throw InvalidArgument("width must be >= 1");
    if (!std::isfinite(energy)) throw InvalidArgument("energy must be finite");
    if (!std::isfinite(coupling)) throw InvalidArgument("coupling must be finite");
  }
};

/// Periodic discrete laplacian -S - S^t, with the conventions 0 for L = 1
/// and -S for L = 2.
inline Mat laplacian(int L) {
  if (L < 1) throw InvalidArgument("laplacian: L must be >= 1");
  Mat D = Mat::Zero(L, L);
  if (L == 1) return D;
  if (L == 2) {
    D(0, 1) = -1.0;
    D(1, 0) = -1.0;
    return D;
  }
  for (int i = 0; i < L; ++i) {
    D(i, (i + 1) % L) = -1.0;
    D(i, (i + L - 1) % L) = -1.0;
  }
  return D;
}

/// Eigenvalue of laplacian(L) on the Fourier mode q (0-based, q = 0 constant).
inline double laplacian_eigenvalue(int L, int q) {
  if (L == 1) return 0.0;
  if (L == 2) return (q % 2 == 0) ? -1.0 : 1.0;
  return -2.0 * std::cos(2.0 * std::numbers::pi * q / L);
}

/// J = [[0, -1], [1, 0]] in L-blocks.
inline Mat symplectic_form(int L) {
  Mat J = Mat::Zero(2 * L, 2 * L);
  J.topRightCorner(L, L) = -Mat::Identity(L, L);
  J.bottomLeftCorner(L, L) = Mat::Identity(L, L);
  return J;
}

inline double draw(DisorderKind kind, SplitMix64& rng) {
  switch (kind) {
    case DisorderKind::rademacher: return (rng() >> 63) ? 1.0 : -1.0;
    case DisorderKind::uniform: return std::sqrt(3.0) * (2.0 * rng.uniform01() - 1.0);
    case DisorderKind::gaussian: return rng.gaussian();
  }
  return 0.0;
}

inline void sample_column(const StripModel& model, SplitMix64& rng, Vec& out) {
  out.resize(model.width);
  for (int i = 0; i < model.width; ++i) out[i] = draw(model.disorder, rng);
}

inline Vec sample_column(const StripModel& model, SplitMix64& rng) {
  Vec v;
  sample_column(model, rng, v);
  return v;
}

/// T = [[Δ + λV - E, -1], [1, 0]].
inline Mat build_transfer(const StripModel& model, const Vec& column) {
  const int L = model.width;
  if (column.size() != L) throw InvalidArgument("build_transfer: column length differs from width");
  Mat T = Mat::Zero(2 * L, 2 * L);
  Mat top = laplacian(L);
  top.diagonal().array() += model.coupling * column.array() - model.energy;
  T.topLeftCorner(L, L) = top;
  T.topRightCorner(L, L) = -Mat::Identity(L, L);
  T.bottomLeftCorner(L, L) = Mat::Identity(L, L);
  return T;
}

/// max |T^t J T - J| divided by max(1, max|T|^2).
inline double symplectic_residual(const Mat& T) {
  const int L = static_cast<int>(T.rows()) / 2;
  const Mat J = symplectic_form(L);
  const double scale = std::max(1.0, T.cwiseAbs().maxCoeff() * T.cwiseAbs().maxCoeff());
  return (T.transpose() * J * T - J).cwiseAbs().maxCoeff() / scale;
}

}  // namespace striplyap
