#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rhoperfect/stats.hpp"
#include "rhoperfect/types.hpp"

namespace rhoperfect {

// Two-way random-effects ANOVA decomposition of a balanced n x k matrix.
// All four sums of squares are computed directly (not by subtraction), so
// ss_total == ss_rows + ss_cols + ss_error is a checkable identity.
struct IccAnova {
  double ss_rows = 0.0;
  double ss_cols = 0.0;
  double ss_error = 0.0;
  double ss_total = 0.0;
  double ms_rows = 0.0;
  double ms_cols = 0.0;
  double ms_error = 0.0;
  std::size_t n = 0;  // rows (items)
  std::size_t k = 0;  // columns (pseudo-raters)
  double icc = 0.0;   // ICC(2,k) = (MS_R - MS_E) / (MS_R + (MS_C - MS_E)/n)
};

IccAnova icc2k_anova(const std::vector<std::vector<double>>& matrix);

struct BalancedMatrix {
  std::vector<std::vector<double>> values;  // n rows of k entries
  std::size_t k = 0;
  std::size_t items_dropped = 0;  // items with fewer than 2 ratings
};

// Balances an unbalanced table for the two-way ANOVA: items with fewer than
// 2 ratings are dropped, k = min remaining rating count, and each item's
// ratings are subsampled to k in a seeded random order. Column positions are
// anonymized pseudo-raters.
BalancedMatrix balance_by_subsampling(const RatingsTable& table,
                                      std::uint64_t seed);

IccAnova icc2k_detail(const RatingsTable& table, std::uint64_t seed);
double icc2k(const RatingsTable& table, std::uint64_t seed);

// Mean over iterations of the correlation between per-item means from a
// random half of the rater pool and from the full rating set. Iterations
// with degenerate variance are skipped.
double subsampling_reliability(const RatingsTable& table,
                               std::size_t iterations, std::uint64_t seed);

struct ComparisonReport {
  MeanStd retest_corr;
  MeanStd icc2k;
  MeanStd subsampling;
  MeanStd rho_sq;
  std::size_t num_seeds = 0;
  std::string balancing_note;

  struct SeedRow {
    std::uint64_t seed = 0;
    double retest_corr = 0.0;
    double icc2k = 0.0;
    double subsampling = 0.0;
    double rho_sq = 0.0;
  };
  std::vector<SeedRow> per_seed;  // sorted by seed
  std::vector<std::uint64_t> failed_seeds;
};

struct CompareOptions {
  std::size_t subsample_iterations = 10;
  std::size_t threads = 1;  // 0 = hardware concurrency
};

// Per seed: split by raters, correlate the two halves, then compute
// ICC(2,k), subsampling reliability and the squared ceiling estimate on the
// first half only.
ComparisonReport compare_report(const RatingsTable& table,
                                std::span<const std::uint64_t> seeds,
                                const CompareOptions& options = {});

}  // namespace rhoperfect
