#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace rhoperfect {

// Compensated (Neumaier) accumulator. Summation order is part of the
// determinism contract, so callers must feed values in a canonical order.
class CompensatedSum {
 public:
  void add(double v) {
    const double t = sum_ + v;
    if (std::abs(sum_) >= std::abs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }

  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 when n < 2
};

double mean(std::span<const double> xs);

// Unbiased sample variance, corrected two-pass algorithm. Never negative.
double sample_variance(std::span<const double> xs);

double sample_covariance(std::span<const double> a, std::span<const double> b);

// Sample Pearson correlation, clamped into [-1, 1].
double pearson_corr(std::span<const double> a, std::span<const double> b);

MeanStd mean_std(std::span<const double> xs);

}  // namespace rhoperfect
