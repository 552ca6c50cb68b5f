#include "rhoperfect/split.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "rhoperfect/core.hpp"
#include "rhoperfect/errors.hpp"
#include "rhoperfect/parallel.hpp"
#include "rhoperfect/rng.hpp"
#include "rhoperfect/stats.hpp"

namespace rhoperfect {

namespace {

// Assembles the two side tables from a per-item partition of rating indices.
SplitPair assemble_pair(const RatingsTable& table, SplitMethod method,
                        std::uint64_t seed,
                        const std::vector<std::vector<bool>>& to_first) {
  SplitPair pair;
  pair.method = method;
  pair.seed = seed;
  pair.first.scale_hint = table.scale_hint;
  pair.second.scale_hint = table.scale_hint;

  for (std::size_t i = 0; i < table.items.size(); ++i) {
    const Item& item = table.items[i];
    Item first{item.item_id, {}, item.condition_tags};
    Item second{item.item_id, {}, item.condition_tags};
    for (std::size_t j = 0; j < item.ratings.size(); ++j) {
      (to_first[i][j] ? first : second).ratings.push_back(item.ratings[j]);
    }
    const bool on_both = !first.ratings.empty() && !second.ratings.empty();
    if (!first.ratings.empty()) pair.first.items.push_back(std::move(first));
    if (!second.ratings.empty()) pair.second.items.push_back(std::move(second));
    if (on_both) pair.common_items.push_back(item.item_id);
  }
  return pair;
}

}  // namespace

std::string_view to_string(SplitMethod method) {
  return method == SplitMethod::SplitRaters ? "split_raters" : "split_ratings";
}

SplitMethod split_method_from_string(std::string_view name) {
  if (name == "raters" || name == "split_raters") return SplitMethod::SplitRaters;
  if (name == "ratings" || name == "split_ratings") return SplitMethod::SplitRatings;
  throw SpecError("unknown split method '" + std::string(name) + "'");
}

SplitPair split_raters(const RatingsTable& table, std::uint64_t seed) {
  std::vector<std::string_view> raters;
  std::unordered_set<std::string_view> seen;
  for (const auto& item : table.items) {
    for (const auto& r : item.ratings) {
      if (seen.insert(r.rater_id).second) raters.push_back(r.rater_id);
    }
  }
  if (raters.size() < 2) {
    throw CannotSplit("splitting raters needs at least 2 distinct raters, found " +
                      std::to_string(raters.size()));
  }

  rng::Stream stream(rng::derive(seed, "split-raters"));
  rng::shuffle(raters, stream);
  const std::size_t first_half = (raters.size() + 1) / 2;  // extra to side one
  std::unordered_set<std::string_view> first_side(raters.begin(),
                                                  raters.begin() + first_half);

  std::vector<std::vector<bool>> to_first(table.items.size());
  for (std::size_t i = 0; i < table.items.size(); ++i) {
    const Item& item = table.items[i];
    to_first[i].resize(item.ratings.size());
    for (std::size_t j = 0; j < item.ratings.size(); ++j) {
      to_first[i][j] = first_side.contains(item.ratings[j].rater_id);
    }
  }
  return assemble_pair(table, SplitMethod::SplitRaters, seed, to_first);
}

SplitPair split_ratings(const RatingsTable& table, std::uint64_t seed) {
  std::vector<std::string> offenders;
  for (const auto& item : table.items) {
    if (item.ratings.size() < 2) offenders.push_back(item.item_id);
  }
  if (!offenders.empty()) {
    std::string ids;
    const std::size_t shown = std::min<std::size_t>(offenders.size(), 10);
    for (std::size_t i = 0; i < shown; ++i) {
      if (i) ids += ", ";
      ids += offenders[i];
    }
    if (offenders.size() > shown) ids += ", ...";
    throw CannotSplit(std::to_string(offenders.size()) +
                      " item(s) have fewer than 2 ratings and cannot be "
                      "split: " +
                      ids);
  }

  const std::uint64_t base = rng::derive(seed, "split-ratings");
  std::vector<std::vector<bool>> to_first(table.items.size());
  for (std::size_t i = 0; i < table.items.size(); ++i) {
    const Item& item = table.items[i];
    const std::size_t m = item.ratings.size();
    std::vector<std::size_t> order(m);
    for (std::size_t j = 0; j < m; ++j) order[j] = j;
    rng::Stream stream(rng::derive(base, rng::fnv1a64(item.item_id)));
    rng::shuffle(order, stream);
    to_first[i].assign(m, false);
    const std::size_t first_half = (m + 1) / 2;  // extra to side one
    for (std::size_t j = 0; j < first_half; ++j) to_first[i][order[j]] = true;
  }
  return assemble_pair(table, SplitMethod::SplitRatings, seed, to_first);
}

SplitPair split_table(const RatingsTable& table, SplitMethod method,
                      std::uint64_t seed) {
  return method == SplitMethod::SplitRaters ? split_raters(table, seed)
                                            : split_ratings(table, seed);
}

double test_retest_corr(const SplitPair& pair) {
  if (pair.common_items.size() < 2) {
    throw TooFewItems(
        "test-retest correlation needs at least 2 items rated on both "
        "sides, got " +
        std::to_string(pair.common_items.size()));
  }
  std::unordered_map<std::string_view, double> first_means;
  first_means.reserve(pair.first.items.size());
  for (const auto& item : pair.first.items) {
    first_means.emplace(item.item_id, item_mean(item));
  }
  std::unordered_map<std::string_view, double> second_means;
  second_means.reserve(pair.second.items.size());
  for (const auto& item : pair.second.items) {
    second_means.emplace(item.item_id, item_mean(item));
  }

  std::vector<double> y1;
  std::vector<double> y2;
  y1.reserve(pair.common_items.size());
  y2.reserve(pair.common_items.size());
  for (const auto& id : pair.common_items) {
    y1.push_back(first_means.at(id));
    y2.push_back(second_means.at(id));
  }
  return pearson_corr(y1, y2);
}

CondCovEstimate conditional_cov_detail(const RatingsTable& table,
                                       SplitMethod method,
                                       std::size_t num_resplits,
                                       std::uint64_t seed) {
  if (num_resplits < 2) {
    throw SpecError("covariance estimation needs at least 2 resplits, got " +
                    std::to_string(num_resplits));
  }

  // Indexed by the item's position in the original table so views into
  // per-resplit temporaries never escape.
  std::unordered_map<std::string_view, std::size_t> index_of;
  index_of.reserve(table.items.size());
  for (std::size_t i = 0; i < table.items.size(); ++i) {
    index_of.emplace(table.items[i].item_id, i);
  }
  std::vector<std::pair<std::vector<double>, std::vector<double>>> samples(
      table.items.size());

  const std::uint64_t base = rng::derive(seed, "cond-cov");
  for (std::size_t r = 0; r < num_resplits; ++r) {
    const SplitPair pair = split_table(table, method, rng::derive(base, r));
    std::unordered_map<std::string_view, double> first_means;
    for (const auto& item : pair.first.items) {
      first_means.emplace(item.item_id, item_mean(item));
    }
    for (const auto& item : pair.second.items) {
      const auto it = first_means.find(item.item_id);
      if (it == first_means.end()) continue;
      auto& entry = samples[index_of.at(item.item_id)];
      entry.first.push_back(it->second);
      entry.second.push_back(item_mean(item));
    }
  }

  CondCovEstimate estimate;
  estimate.num_resplits = num_resplits;

  std::vector<double> covs;
  std::vector<double> excesses;
  for (std::size_t i = 0; i < table.items.size(); ++i) {  // canonical order
    const auto& entry = samples[i];
    if (entry.first.size() < 2) continue;
    const double cov = sample_covariance(entry.first, entry.second);
    covs.push_back(cov);
    excesses.push_back(cov + item_conditional_variance(table.items[i]));
  }
  if (covs.empty()) {
    throw CannotSplit(
        "no item appeared on both sides in at least 2 resplits");
  }

  estimate.items_used = covs.size();
  estimate.mean_cov = mean(covs);
  estimate.excess_mean = mean(excesses);
  estimate.mechanical_offset = estimate.mean_cov - estimate.excess_mean;
  estimate.excess_se =
      excesses.size() > 1
          ? std::sqrt(sample_variance(excesses) /
                      static_cast<double>(excesses.size()))
          : 0.0;
  return estimate;
}

double conditional_cov_term(const RatingsTable& table, SplitMethod method,
                            std::size_t num_resplits, std::uint64_t seed) {
  return conditional_cov_detail(table, method, num_resplits, seed).mean_cov;
}

ValidationReport run_validation(const RatingsTable& table, SplitMethod method,
                                std::span<const std::uint64_t> seeds,
                                const ValidationOptions& options) {
  if (seeds.empty()) throw SpecError("validation needs at least 1 seed");

  struct Slot {
    bool ok = false;
    SeedOutcome outcome;
    std::exception_ptr error;
  };
  std::vector<Slot> slots(seeds.size());

  detail::parallel_for(seeds.size(), options.threads, [&](std::size_t i) {
    Slot& slot = slots[i];
    slot.outcome.seed = seeds[i];
    try {
      const SplitPair pair = split_table(table, method, seeds[i]);
      const RhoEstimate first_estimate = rho_perfect(pair.first);
      slot.outcome.rho_sq = first_estimate.rho * first_estimate.rho;
      slot.outcome.retest_corr = test_retest_corr(pair);
      slot.ok = true;
    } catch (const Error&) {
      slot.error = std::current_exception();
    }
  });

  ValidationReport report;
  report.method = method;
  for (const Slot& slot : slots) {
    if (slot.ok) {
      report.per_seed.push_back(slot.outcome);
    } else {
      report.failed_seeds.push_back(slot.outcome.seed);
    }
  }
  if (report.per_seed.empty()) {
    for (const Slot& slot : slots) {
      if (slot.error) std::rethrow_exception(slot.error);
    }
  }
  std::stable_sort(
      report.per_seed.begin(), report.per_seed.end(),
      [](const SeedOutcome& a, const SeedOutcome& b) { return a.seed < b.seed; });
  std::sort(report.failed_seeds.begin(), report.failed_seeds.end());

  report.num_seeds = report.per_seed.size();
  std::vector<double> rho_sq;
  std::vector<double> retest;
  for (const auto& row : report.per_seed) {
    rho_sq.push_back(row.rho_sq);
    retest.push_back(row.retest_corr);
  }
  const MeanStd rho_stats = mean_std(rho_sq);
  const MeanStd retest_stats = mean_std(retest);
  report.rho_sq_mean = rho_stats.mean;
  report.rho_sq_std = rho_stats.std;
  report.retest_corr_mean = retest_stats.mean;
  report.retest_corr_std = retest_stats.std;

  report.cond_cov = conditional_cov_detail(
      table, method, options.cov_resplits,
      rng::derive(seeds.front(), "validation-cov"));
  report.cond_cov_mean = report.cond_cov.mean_cov;
  return report;
}

}  // namespace rhoperfect
