#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include <Eigen/Dense>

namespace striplyap {

/// Running mean of a vector-valued time series with batch-means standard
/// errors. Samples are grouped into consecutive batches of fixed length;
/// the spread of completed batch means (Welford, Chan merge) gives the
/// error bar. A trailing incomplete batch counts toward the mean only.
class BatchMeans {
 public:
  BatchMeans() = default;
  BatchMeans(int dim, std::int64_t batch_length)
      : batch_length_(batch_length),
        sum_(Eigen::VectorXd::Zero(dim)),
        current_(Eigen::VectorXd::Zero(dim)),
        bmean_(Eigen::VectorXd::Zero(dim)),
        bm2_(Eigen::VectorXd::Zero(dim)) {
    if (batch_length < 1) throw std::invalid_argument("BatchMeans: batch length must be >= 1");
  }

  int dim() const { return static_cast<int>(sum_.size()); }
  std::int64_t count() const { return n_; }
  std::int64_t batches() const { return nb_; }
  std::int64_t batch_length() const { return batch_length_; }

  template <class Derived>
  void add(const Eigen::MatrixBase<Derived>& x) {
    sum_ += x;
    current_ += x;
    ++n_;
    if (++cn_ == batch_length_) {
      push_batch(current_ / static_cast<double>(batch_length_));
      current_.setZero();
      cn_ = 0;
    }
  }

  /// Folds in another accumulator. Its incomplete batch enters the mean
  /// but not the batch statistics.
  void merge(const BatchMeans& o) {
    if (o.n_ == 0) return;
    if (n_ == 0 && sum_.size() == 0) {
      *this = o;
      current_.setZero();
      cn_ = 0;
      return;
    }
    sum_ += o.sum_;
    n_ += o.n_;
    if (o.nb_ > 0) {
      const double na = static_cast<double>(nb_);
      const double nb = static_cast<double>(o.nb_);
      const Eigen::VectorXd delta = o.bmean_ - bmean_;
      bmean_ += delta * (nb / (na + nb));
      bm2_ += o.bm2_ + delta.cwiseProduct(delta) * (na * nb / (na + nb));
      nb_ += o.nb_;
    }
    // batches stay aligned only within one stream
    current_.setZero();
    cn_ = 0;
  }

  Eigen::VectorXd mean() const {
    if (n_ == 0) return Eigen::VectorXd::Zero(dim());
    return sum_ / static_cast<double>(n_);
  }

  /// Standard error of mean(); NaN with fewer than two batches.
  Eigen::VectorXd standard_error() const {
    if (nb_ < 2) return Eigen::VectorXd::Constant(dim(), std::nan(""));
    const double nb = static_cast<double>(nb_);
    return (bm2_ / (nb - 1.0) / nb).cwiseSqrt();
  }

  const Eigen::VectorXd& sum() const { return sum_; }

 private:
  void push_batch(const Eigen::VectorXd& m) {
    ++nb_;
    const Eigen::VectorXd delta = m - bmean_;
    bmean_ += delta / static_cast<double>(nb_);
    bm2_ += delta.cwiseProduct(m - bmean_);
  }

  std::int64_t batch_length_ = 1000;
  std::int64_t n_ = 0;
  std::int64_t cn_ = 0;
  std::int64_t nb_ = 0;
  Eigen::VectorXd sum_;
  Eigen::VectorXd current_;
  Eigen::VectorXd bmean_;
  Eigen::VectorXd bm2_;
};

}  // namespace striplyap
