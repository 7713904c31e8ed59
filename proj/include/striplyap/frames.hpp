#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "errors.hpp"
#include "model.hpp"
#include "normalform.hpp"
#include "rng.hpp"

namespace striplyap {

/// Orthonormal, pairwise J-isotropic columns in R^{2L}.
struct SymplecticFrame {
  Mat u;

  int width() const { return static_cast<int>(u.rows()) / 2; }
  int size() const { return static_cast<int>(u.cols()); }
  Mat projection() const { return u * u.transpose(); }
};

/// J x for each column x = (top, bottom): (-bottom, top).
inline Mat apply_J(const Mat& x) {
  const Eigen::Index L = x.rows() / 2;
  Mat y(x.rows(), x.cols());
  y.topRows(L) = -x.bottomRows(L);
  y.bottomRows(L) = x.topRows(L);
  return y;
}

inline double orthonormality_residual(const Mat& u) {
  return max_abs(Mat(u.transpose() * u - Mat::Identity(u.cols(), u.cols())));
}

inline double isotropy_residual(const Mat& u) { return max_abs(Mat(u.transpose() * apply_J(u))); }

inline constexpr double kCollapseNorm = 1e-290;

/// Modified Gram-Schmidt with one re-orthogonalization pass, in place.
/// logs[q] receives log of the norm of the q-th vector after it has been
/// orthogonalized against the earlier ones.
inline void orthonormalize(Mat& X, double* logs) {
  const Eigen::Index p = X.cols();
  for (Eigen::Index q = 0; q < p; ++q) {
    auto v = X.col(q);
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index r = 0; r < q; ++r) v -= X.col(r).dot(v) * X.col(r);
    const double nrm = v.norm();
    if (!(nrm > kCollapseNorm) || !std::isfinite(nrm))
      throw RankCollapse("frame vector " + std::to_string(q) + " collapsed (norm " + std::to_string(nrm) + ")");
    v /= nrm;
    if (logs) logs[q] = std::log(nrm);
  }
}

/// Restores exact isotropy by orthogonalizing each u_k against
/// u_1..u_{k-1} and J u_1..J u_{k-1}.
inline void symplectic_reproject(Mat& u) {
  const Eigen::Index L = u.rows() / 2;
  const Eigen::Index p = u.cols();
  Vec Ju(u.rows());
  for (Eigen::Index k = 0; k < p; ++k) {
    auto v = u.col(k);
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index r = 0; r < k; ++r) {
        v -= u.col(r).dot(v) * u.col(r);
        Ju.head(L) = -u.col(r).tail(L);
        Ju.tail(L) = u.col(r).head(L);
        v -= Ju.dot(v) * Ju;
      }
    const double nrm = v.norm();
    if (!(nrm > kCollapseNorm)) throw RankCollapse("symplectic re-projection collapsed");
    v /= nrm;
  }
}

/// Random p-frame by symplectic Gram-Schmidt of gaussian vectors.
inline SymplecticFrame random_frame(SplitMix64& rng, int L, int p) {
  if (L < 1 || p < 1 || p > L) throw InvalidArgument("random_frame: need 1 <= p <= L");
  Mat u(2 * L, p);
  Vec Ju(2 * L);
  for (int k = 0; k < p; ++k) {
    for (int attempt = 0;; ++attempt) {
      if (attempt > 100) throw RankCollapse("random_frame: repeated degenerate draws");
      Vec v(2 * L);
      for (int a = 0; a < 2 * L; ++a) v[a] = rng.gaussian();
      const double start = v.norm();
      for (int pass = 0; pass < 2; ++pass)
        for (int r = 0; r < k; ++r) {
          v -= u.col(r).dot(v) * u.col(r);
          Ju.head(L) = -u.col(r).tail(L);
          Ju.tail(L) = u.col(r).head(L);
          v -= Ju.dot(v) * Ju;
        }
      const double nrm = v.norm();
      if (nrm > 1e-6 * start) {
        u.col(k) = v / nrm;
        break;
      }
    }
  }
  return {u};
}

struct StepResult {
  SymplecticFrame frame;
  Vec log_expansions;
};

/// Image of a frame under T: Schmidt orthonormalization of (T u_1, ..., T u_p).
inline StepResult frame_action(const Mat& T, const SymplecticFrame& frame) {
  StepResult r;
  r.frame.u = T * frame.u;
  r.log_expansions.resize(frame.size());
  orthonormalize(r.frame.u, r.log_expansions.data());
  return r;
}

/// rho_{p,j}^± for every slot p (rows) and channel j (columns).
struct WeightTable {
  Mat plus;
  Mat minus;
  Mat total() const { return plus + minus; }
};

inline void channel_weights(const Mat& u, const NormalFormData& nf, WeightTable& out, Mat& re, Mat& im) {
  const int L = nf.L;
  const Eigen::Index p = u.cols();
  re.noalias() = nf.WH_re * u;
  im.noalias() = nf.WH_im * u;
  out.plus.setZero(p, nf.channels());
  out.minus.setZero(p, nf.channels());
  for (int q = 0; q < L; ++q) {
    const int j = nf.mode_channel[static_cast<std::size_t>(q)];
    out.plus.col(j) += (re.row(q).array().square() + im.row(q).array().square()).matrix().transpose();
    out.minus.col(j) += (re.row(q + L).array().square() + im.row(q + L).array().square()).matrix().transpose();
  }
}

inline WeightTable channel_weights(const SymplecticFrame& frame, const NormalFormData& nf) {
  WeightTable w;
  Mat re, im;
  channel_weights(frame.u, nf, w, re, im);
  return w;
}

/// Sum rules: max over slots of |Σ_j rho_{p,j} - 1| and, for complete
/// frames, max over channels of |Σ_p rho_{p,j} - ν_j|.
inline double sum_rule_defect(const WeightTable& w, const NormalFormData& nf) {
  const Mat t = w.total();
  double d = (t.rowwise().sum().array() - 1.0).abs().maxCoeff();
  if (t.rows() == nf.L)
    for (int j = 0; j < nf.channels(); ++j)
      d = std::max(d, std::abs(t.col(j).sum() - nf.nu[static_cast<std::size_t>(j)]));
  return d;
}

struct WeightOptions {
  bool full_second = false;  // second moments for every slot
  bool third = false;        // third moments of slot 1
};

/// Running sums of channel-weight moments. Second moments use
/// rho_{p,j} = rho^+ + rho^-.
class WeightStats {
 public:
  WeightStats() = default;
  WeightStats(int slots, int channels, WeightOptions opt = {})
      : slots_(slots),
        nch_(channels),
        opt_(opt),
        plus_(Mat::Zero(slots, channels)),
        minus_(Mat::Zero(slots, channels)),
        first_pair_(Mat::Zero(channels, channels)),
        last_pair_(Mat::Zero(channels, channels)) {
    if (opt.full_second) all_pairs_.assign(static_cast<std::size_t>(slots), Mat::Zero(channels, channels));
    if (opt.third) third_.assign(static_cast<std::size_t>(channels * channels * channels), 0.0);
  }

  void add(const WeightTable& w) {
    plus_ += w.plus;
    minus_ += w.minus;
    const Mat t = w.total();
    const Vec a = t.row(0).transpose();
    const Vec b = t.row(slots_ - 1).transpose();
    first_pair_.noalias() += a * a.transpose();
    last_pair_.noalias() += b * b.transpose();
    if (opt_.full_second)
      for (int p = 0; p < slots_; ++p) {
        const Vec r = t.row(p).transpose();
        all_pairs_[static_cast<std::size_t>(p)].noalias() += r * r.transpose();
      }
    if (opt_.third)
      for (int j = 0; j < nch_; ++j)
        for (int m = 0; m < nch_; ++m)
          for (int k = 0; k < nch_; ++k) third_[idx3(j, m, k)] += a[j] * a[m] * a[k];
    ++n_;
  }

  void merge(const WeightStats& o) {
    if (o.n_ == 0) return;
    if (n_ == 0 && slots_ == 0) {
      *this = o;
      return;
    }
    if (o.slots_ != slots_ || o.nch_ != nch_) throw InvalidArgument("WeightStats::merge: shape mismatch");
    plus_ += o.plus_;
    minus_ += o.minus_;
    first_pair_ += o.first_pair_;
    last_pair_ += o.last_pair_;
    if (opt_.full_second && o.opt_.full_second) {
      for (std::size_t p = 0; p < all_pairs_.size(); ++p) all_pairs_[p] += o.all_pairs_[p];
    } else {
      opt_.full_second = false;
      all_pairs_.clear();
    }
    if (opt_.third && o.opt_.third) {
      for (std::size_t i = 0; i < third_.size(); ++i) third_[i] += o.third_[i];
    } else {
      opt_.third = false;
      third_.clear();
    }
    n_ += o.n_;
  }

  std::int64_t samples() const { return n_; }
  int slots() const { return slots_; }
  int channels() const { return nch_; }
  bool has_full_second() const { return opt_.full_second; }
  bool has_third() const { return opt_.third; }

  Mat first_plus() const { return plus_ / norm(); }
  Mat first_minus() const { return minus_ / norm(); }
  Mat first() const { return (plus_ + minus_) / norm(); }
  /// <rho_{1,j} rho_{1,k}>
  Mat second_first() const { return first_pair_ / norm(); }
  /// <rho_{p,j} rho_{p,k}> for the last tracked slot p
  Mat second_last() const { return last_pair_ / norm(); }
  Mat second(int p) const {
    if (p == 0) return second_first();
    if (p == slots_ - 1) return second_last();
    if (!opt_.full_second) throw MissingMoments("second moments of slot " + std::to_string(p + 1) + " not tracked");
    return all_pairs_[static_cast<std::size_t>(p)] / norm();
  }
  /// <rho_{1,j} rho_{1,m} rho_{1,k}>
  double third(int j, int m, int k) const {
    if (!opt_.third) throw MissingMoments("third moments not tracked");
    return third_[idx3(j, m, k)] / norm();
  }

 private:
  double norm() const {
    if (n_ == 0) throw MissingMoments("no weight samples");
    return static_cast<double>(n_);
  }
  std::size_t idx3(int j, int m, int k) const {
    return static_cast<std::size_t>((j * nch_ + m) * nch_ + k);
  }

  int slots_ = 0;
  int nch_ = 0;
  WeightOptions opt_;
  std::int64_t n_ = 0;
  Mat plus_, minus_, first_pair_, last_pair_;
  std::vector<Mat> all_pairs_;
  std::vector<double> third_;
};

}  // namespace striplyap
