#include "rhoperfect/stats.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rhoperfect/errors.hpp"

namespace rhoperfect {

double mean(std::span<const double> xs) {
  if (xs.empty()) throw ShapeError("mean of an empty sequence");
  CompensatedSum sum;
  for (const double x : xs) sum.add(x);
  return sum.value() / static_cast<double>(xs.size());
}

double sample_variance(std::span<const double> xs) {
  const std::size_t n = xs.size();
  if (n < 2) {
    throw TooFewItems("sample variance needs at least 2 values, got " +
                      std::to_string(n));
  }
  const double m = mean(xs);
  CompensatedSum sq;
  CompensatedSum lin;  // residual of the mean, corrects the two-pass result
  for (const double x : xs) {
    const double d = x - m;
    sq.add(d * d);
    lin.add(d);
  }
  const double nn = static_cast<double>(n);
  const double v = (sq.value() - lin.value() * lin.value() / nn) / (nn - 1.0);
  return v < 0.0 ? 0.0 : v;
}

double sample_covariance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("covariance needs equal lengths, got " +
                     std::to_string(a.size()) + " and " +
                     std::to_string(b.size()));
  }
  const std::size_t n = a.size();
  if (n < 2) {
    throw TooFewItems("sample covariance needs at least 2 pairs, got " +
                      std::to_string(n));
  }
  const double ma = mean(a);
  const double mb = mean(b);
  CompensatedSum cross;
  for (std::size_t i = 0; i < n; ++i) {
    cross.add((a[i] - ma) * (b[i] - mb));
  }
  return cross.value() / (static_cast<double>(n) - 1.0);
}

double pearson_corr(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("correlation needs equal lengths, got " +
                     std::to_string(a.size()) + " and " +
                     std::to_string(b.size()));
  }
  const std::size_t n = a.size();
  if (n < 2) {
    throw DegenerateVariance("correlation needs at least 2 pairs, got " +
                             std::to_string(n));
  }
  const double ma = mean(a);
  const double mb = mean(b);
  CompensatedSum saa;
  CompensatedSum sbb;
  CompensatedSum sab;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    saa.add(da * da);
    sbb.add(db * db);
    sab.add(da * db);
  }
  const double va = saa.value();
  const double vb = sbb.value();
  if (va <= 0.0 || vb <= 0.0) {
    throw DegenerateVariance("correlation of a constant sequence");
  }
  const double r = sab.value() / std::sqrt(va * vb);
  return std::clamp(r, -1.0, 1.0);
}

MeanStd mean_std(std::span<const double> xs) {
  MeanStd result;
  result.mean = mean(xs);
  result.std = xs.size() > 1 ? std::sqrt(sample_variance(xs)) : 0.0;
  return result;
}

}  // namespace rhoperfect
