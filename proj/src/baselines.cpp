#include "rhoperfect/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "rhoperfect/core.hpp"
#include "rhoperfect/errors.hpp"
#include "rhoperfect/parallel.hpp"
#include "rhoperfect/rng.hpp"
#include "rhoperfect/split.hpp"
#include "rhoperfect/stats.hpp"

namespace rhoperfect {

namespace {

constexpr const char* kBalancingNote =
    "ICC(2,k): items with fewer than 2 ratings dropped; each remaining "
    "item's ratings subsampled without replacement to k = min rating count, "
    "in seeded random order; column positions act as pseudo-raters";

}  // namespace

IccAnova icc2k_anova(const std::vector<std::vector<double>>& matrix) {
  const std::size_t n = matrix.size();
  if (n < 2) {
    throw CannotBalance("ICC needs at least 2 rows, got " + std::to_string(n));
  }
  const std::size_t k = matrix.front().size();
  if (k < 2) {
    throw CannotBalance("ICC needs at least 2 columns, got " +
                        std::to_string(k));
  }
  for (const auto& row : matrix) {
    if (row.size() != k) throw ShapeError("ICC matrix is not rectangular");
  }

  const double nn = static_cast<double>(n);
  const double kk = static_cast<double>(k);

  CompensatedSum total;
  for (const auto& row : matrix) {
    for (const double x : row) total.add(x);
  }
  const double grand = total.value() / (nn * kk);

  std::vector<double> row_means(n);
  for (std::size_t i = 0; i < n; ++i) {
    CompensatedSum s;
    for (const double x : matrix[i]) s.add(x);
    row_means[i] = s.value() / kk;
  }
  std::vector<double> col_means(k);
  for (std::size_t j = 0; j < k; ++j) {
    CompensatedSum s;
    for (std::size_t i = 0; i < n; ++i) s.add(matrix[i][j]);
    col_means[j] = s.value() / nn;
  }

  IccAnova a;
  a.n = n;
  a.k = k;

  CompensatedSum ss_rows;
  for (const double rm : row_means) {
    const double d = rm - grand;
    ss_rows.add(d * d);
  }
  a.ss_rows = kk * ss_rows.value();

  CompensatedSum ss_cols;
  for (const double cm : col_means) {
    const double d = cm - grand;
    ss_cols.add(d * d);
  }
  a.ss_cols = nn * ss_cols.value();

  CompensatedSum ss_total;
  CompensatedSum ss_error;  // residuals, computed directly
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const double d = matrix[i][j] - grand;
      ss_total.add(d * d);
      const double e = matrix[i][j] - row_means[i] - col_means[j] + grand;
      ss_error.add(e * e);
    }
  }
  a.ss_total = ss_total.value();
  a.ss_error = ss_error.value();

  a.ms_rows = a.ss_rows / (nn - 1.0);
  a.ms_cols = a.ss_cols / (kk - 1.0);
  a.ms_error = a.ss_error / ((nn - 1.0) * (kk - 1.0));

  // A non-positive denominator means the residual mean square exceeds both
  // effect terms; the two-way decomposition carries no usable signal.
  const double denom = a.ms_rows + (a.ms_cols - a.ms_error) / nn;
  if (denom <= 0.0) {
    throw DegenerateVariance(
        "ICC variance decomposition is degenerate (no usable item signal)");
  }
  // The raw ratio is not range-restricted; anything past -1 still just
  // means "no reliability".
  a.icc = std::clamp((a.ms_rows - a.ms_error) / denom, -1.0, 1.0);
  return a;
}

BalancedMatrix balance_by_subsampling(const RatingsTable& table,
                                      std::uint64_t seed) {
  BalancedMatrix balanced;
  std::vector<const Item*> usable;
  for (const auto& item : table.items) {
    if (item.ratings.size() >= 2) {
      usable.push_back(&item);
    } else {
      ++balanced.items_dropped;
    }
  }
  if (usable.size() < 2) {
    throw CannotBalance("balancing needs at least 2 items with 2+ ratings, got " +
                        std::to_string(usable.size()));
  }
  std::size_t k = usable.front()->ratings.size();
  for (const Item* item : usable) k = std::min(k, item->ratings.size());
  balanced.k = k;

  const std::uint64_t base = rng::derive(seed, "icc-balance");
  balanced.values.reserve(usable.size());
  for (const Item* item : usable) {
    const std::size_t m = item->ratings.size();
    std::vector<std::size_t> order(m);
    for (std::size_t j = 0; j < m; ++j) order[j] = j;
    rng::Stream stream(rng::derive(base, rng::fnv1a64(item->item_id)));
    rng::shuffle(order, stream);
    std::vector<double> row;
    row.reserve(k);
    for (std::size_t j = 0; j < k; ++j) {
      row.push_back(item->ratings[order[j]].value);
    }
    balanced.values.push_back(std::move(row));
  }
  return balanced;
}

IccAnova icc2k_detail(const RatingsTable& table, std::uint64_t seed) {
  return icc2k_anova(balance_by_subsampling(table, seed).values);
}

double icc2k(const RatingsTable& table, std::uint64_t seed) {
  return icc2k_detail(table, seed).icc;
}

double subsampling_reliability(const RatingsTable& table,
                               std::size_t iterations, std::uint64_t seed) {
  if (iterations < 1) {
    throw SpecError("subsampling reliability needs at least 1 iteration");
  }
  std::vector<std::string_view> raters;
  std::unordered_set<std::string_view> seen;
  for (const auto& item : table.items) {
    for (const auto& r : item.ratings) {
      if (seen.insert(r.rater_id).second) raters.push_back(r.rater_id);
    }
  }
  if (raters.size() < 2) {
    throw CannotSplit("subsampling needs at least 2 distinct raters, found " +
                      std::to_string(raters.size()));
  }

  // Full-pool means, computed once.
  std::vector<double> full_means;
  full_means.reserve(table.items.size());
  for (const auto& item : table.items) full_means.push_back(item_mean(item));

  const std::uint64_t base = rng::derive(seed, "subsample");
  CompensatedSum corr_sum;
  std::size_t successes = 0;
  std::vector<std::string_view> pool = raters;
  for (std::size_t iter = 0; iter < iterations; ++iter) {
    rng::Stream stream(rng::derive(base, iter));
    rng::shuffle(pool, stream);
    const std::size_t half = (pool.size() + 1) / 2;
    const std::unordered_set<std::string_view> drawn(pool.begin(),
                                                     pool.begin() + half);

    std::vector<double> half_means;
    std::vector<double> matched_full;
    for (std::size_t i = 0; i < table.items.size(); ++i) {
      CompensatedSum s;
      std::size_t count = 0;
      for (const auto& r : table.items[i].ratings) {
        if (drawn.contains(r.rater_id)) {
          s.add(r.value);
          ++count;
        }
      }
      if (count == 0) continue;
      half_means.push_back(s.value() / static_cast<double>(count));
      matched_full.push_back(full_means[i]);
    }
    try {
      corr_sum.add(pearson_corr(half_means, matched_full));
      ++successes;
    } catch (const DegenerateVariance&) {
      // iteration skipped
    }
  }
  if (successes == 0) {
    throw DegenerateVariance(
        "every subsampling iteration had degenerate variance");
  }
  return corr_sum.value() / static_cast<double>(successes);
}

ComparisonReport compare_report(const RatingsTable& table,
                                std::span<const std::uint64_t> seeds,
                                const CompareOptions& options) {
  if (seeds.empty()) throw SpecError("comparison needs at least 1 seed");

  struct Slot {
    bool ok = false;
    ComparisonReport::SeedRow row;
    std::exception_ptr error;
  };
  std::vector<Slot> slots(seeds.size());

  detail::parallel_for(seeds.size(), options.threads, [&](std::size_t i) {
    Slot& slot = slots[i];
    slot.row.seed = seeds[i];
    try {
      const SplitPair pair = split_raters(table, seeds[i]);
      slot.row.retest_corr = test_retest_corr(pair);
      // Reliability measures see only the first evaluation.
      slot.row.icc2k = icc2k(pair.first, rng::derive(seeds[i], "icc"));
      slot.row.subsampling = subsampling_reliability(
          pair.first, options.subsample_iterations,
          rng::derive(seeds[i], "subsampling"));
      const RhoEstimate estimate = rho_perfect(pair.first);
      slot.row.rho_sq = estimate.rho * estimate.rho;
      slot.ok = true;
    } catch (const Error&) {
      slot.error = std::current_exception();
    }
  });

  ComparisonReport report;
  report.balancing_note = kBalancingNote;
  for (const Slot& slot : slots) {
    if (slot.ok) {
      report.per_seed.push_back(slot.row);
    } else {
      report.failed_seeds.push_back(slot.row.seed);
    }
  }
  if (report.per_seed.empty()) {
    for (const Slot& slot : slots) {
      if (slot.error) std::rethrow_exception(slot.error);
    }
  }
  std::stable_sort(report.per_seed.begin(), report.per_seed.end(),
                   [](const ComparisonReport::SeedRow& a,
                      const ComparisonReport::SeedRow& b) {
                     return a.seed < b.seed;
                   });
  std::sort(report.failed_seeds.begin(), report.failed_seeds.end());
  report.num_seeds = report.per_seed.size();

  std::vector<double> retest;
  std::vector<double> icc;
  std::vector<double> subs;
  std::vector<double> rho_sq;
  for (const auto& row : report.per_seed) {
    retest.push_back(row.retest_corr);
    icc.push_back(row.icc2k);
    subs.push_back(row.subsampling);
    rho_sq.push_back(row.rho_sq);
  }
  report.retest_corr = mean_std(retest);
  report.icc2k = mean_std(icc);
  report.subsampling = mean_std(subs);
  report.rho_sq = mean_std(rho_sq);
  return report;
}

}  // namespace rhoperfect
