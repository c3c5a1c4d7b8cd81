#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace dynkin {

/// Mergeable mean/variance accumulator (Welford update, Chan merge).
class RunningStats {
 public:
  void add(double x) noexcept {
    ++n_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(n_);
    m2_ += d * (x - mean_);
  }

  void merge(const RunningStats& o) noexcept {
    if (o.n_ == 0) return;
    if (n_ == 0) {
      *this = o;
      return;
    }
    const double n = static_cast<double>(n_ + o.n_);
    const double d = o.mean_ - mean_;
    mean_ += d * static_cast<double>(o.n_) / n;
    m2_ += o.m2_ + d * d * static_cast<double>(n_) * static_cast<double>(o.n_) / n;
    n_ += o.n_;
  }

  std::size_t count() const noexcept { return n_; }
  double mean() const noexcept { return mean_; }
  double variance() const noexcept { return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0; }
  double stddev() const noexcept { return std::sqrt(variance()); }
  /// Standard error of the mean.
  double stderr_mean() const noexcept {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }

 private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

/// Second-moment estimator for a centered quantity: E[X Y] with standard
/// error, where the mean is known to be zero.
class CenteredMoment {
 public:
  void add(double x, double y) noexcept { products_.add(x * y); }
  void merge(const CenteredMoment& o) noexcept { products_.merge(o.products_); }
  std::size_t count() const noexcept { return products_.count(); }
  double value() const noexcept { return products_.mean(); }
  double stderr_value() const noexcept { return products_.stderr_mean(); }

 private:
  RunningStats products_;
};

}  // namespace dynkin
