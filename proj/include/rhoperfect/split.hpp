#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rhoperfect/types.hpp"

namespace rhoperfect {

enum class SplitMethod {
  SplitRaters,   // partition the rater pool
  SplitRatings,  // partition each item's ratings
};

std::string_view to_string(SplitMethod method);
SplitMethod split_method_from_string(std::string_view name);

// Two simulated independent evaluations of the same items.
struct SplitPair {
  RatingsTable first;
  RatingsTable second;
  SplitMethod method = SplitMethod::SplitRaters;
  std::uint64_t seed = 0;
  std::vector<std::string> common_items;  // >= 1 rating on both sides
};

// Shuffles the distinct raters with the seeded stream and assigns the first
// ceil(R/2) of them to the first side. Items left without ratings on a side
// are omitted from that side's table.
SplitPair split_raters(const RatingsTable& table, std::uint64_t seed);

// Per item, shuffles the ratings with a stream derived from (seed, item_id)
// and assigns the first ceil(m/2) to the first side. Every item must have
// at least 2 ratings.
SplitPair split_ratings(const RatingsTable& table, std::uint64_t seed);

SplitPair split_table(const RatingsTable& table, SplitMethod method,
                      std::uint64_t seed);

// Pearson correlation of the two sides' per-item means over common_items.
double test_retest_corr(const SplitPair& pair);

// Diagnostic for the across-split covariance of the two sides' item means.
//
// mean_cov is the plain estimate: per item, the sample covariance of
// (y1, y2) over independent resplits, averaged over items. For a fixed
// table this quantity is mechanically negative: complementary halves of the
// same ratings anti-correlate, with expectation exactly
// -E[Var(Y|X)] regardless of the split sizes. excess_mean subtracts that
// offset, so it is zero-mean whenever the resplit machinery is sound, and
// excess_se is its standard error across items.
struct CondCovEstimate {
  double mean_cov = 0.0;
  double mechanical_offset = 0.0;
  double excess_mean = 0.0;
  double excess_se = 0.0;
  std::size_t items_used = 0;
  std::size_t num_resplits = 0;
};

CondCovEstimate conditional_cov_detail(const RatingsTable& table,
                                       SplitMethod method,
                                       std::size_t num_resplits,
                                       std::uint64_t seed);

// The plain averaged covariance (CondCovEstimate::mean_cov).
double conditional_cov_term(const RatingsTable& table, SplitMethod method,
                            std::size_t num_resplits, std::uint64_t seed);

struct SeedOutcome {
  std::uint64_t seed = 0;
  double rho_sq = 0.0;       // squared ceiling estimate of the first side
  double retest_corr = 0.0;  // Corr(Y1, Y2)
};

struct ValidationReport {
  SplitMethod method = SplitMethod::SplitRaters;
  std::size_t num_seeds = 0;  // successful seeds
  double rho_sq_mean = 0.0;
  double rho_sq_std = 0.0;
  double retest_corr_mean = 0.0;
  double retest_corr_std = 0.0;
  double cond_cov_mean = 0.0;
  CondCovEstimate cond_cov;
  std::vector<SeedOutcome> per_seed;  // sorted by seed
  std::vector<std::uint64_t> failed_seeds;
};

struct ValidationOptions {
  std::size_t cov_resplits = 20;
  std::size_t threads = 1;  // 0 = hardware concurrency
};

// Per seed: split, estimate the ceiling on the first side only, and compute
// the test-retest correlation of the pair. Seeds whose split degenerates are
// excluded and recorded. Aggregation order is sorted by seed, so results do
// not depend on the thread count.
ValidationReport run_validation(const RatingsTable& table, SplitMethod method,
                                std::span<const std::uint64_t> seeds,
                                const ValidationOptions& options = {});

}  // namespace rhoperfect
