#include "rhoperfect/core.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "rhoperfect/errors.hpp"
#include "rhoperfect/stats.hpp"

namespace rhoperfect {

double item_mean(const Item& item) {
  if (item.ratings.empty()) {
    throw EmptyItem("item '" + item.item_id + "' has no ratings");
  }
  CompensatedSum sum;
  for (const auto& r : item.ratings) sum.add(r.value);
  return sum.value() / static_cast<double>(item.ratings.size());
}

double grand_variance(const RatingsTable& table) {
  if (table.num_items() < 2) {
    throw TooFewItems("variance of item means needs at least 2 items, got " +
                      std::to_string(table.num_items()));
  }
  std::vector<double> means;
  means.reserve(table.num_items());
  for (const auto& item : table.items) means.push_back(item_mean(item));
  return sample_variance(means);
}

double item_conditional_variance(const Item& item) {
  const std::size_t m = item.ratings.size();
  if (m < 2) {
    throw UndefinedConditionalVariance(
        "item '" + item.item_id + "' has " + std::to_string(m) +
        " rating(s); the variance of its mean is undefined");
  }
  const double y = item_mean(item);
  CompensatedSum sq;
  CompensatedSum lin;
  for (const auto& r : item.ratings) {
    const double d = r.value - y;
    sq.add(d * d);
    lin.add(d);
  }
  const double mm = static_cast<double>(m);
  const double ss = sq.value() - lin.value() * lin.value() / mm;
  const double v = ss / (mm * (mm - 1.0));
  return v < 0.0 ? 0.0 : v;
}

double expected_conditional_variance(const RatingsTable& table) {
  if (table.items.empty()) {
    throw TooFewItems("expected conditional variance of an empty table");
  }
  CompensatedSum sum;
  for (const auto& item : table.items) {
    sum.add(item_conditional_variance(item));
  }
  return sum.value() / static_cast<double>(table.num_items());
}

std::vector<Warning> validate_table(const RatingsTable& table) {
  std::vector<Warning> warnings;
  const std::size_t n = table.num_items();
  if (n < kRecommendedMinItems) {
    warnings.push_back(
        {WarningCode::FewItems,
         "table has " + std::to_string(n) + " item(s); at least " +
             std::to_string(kRecommendedMinItems) +
             " are recommended for a stable estimate",
         n});
  }
  std::size_t below = 0;
  for (const auto& item : table.items) {
    if (item.ratings.size() < kRecommendedMinRatingsPerItem) ++below;
  }
  if (below > 0) {
    warnings.push_back(
        {WarningCode::FewRatings,
         std::to_string(below) + " item(s) have fewer than " +
             std::to_string(kRecommendedMinRatingsPerItem) + " ratings",
         below});
  }
  return warnings;
}

RhoEstimate rho_perfect(const RatingsTable& table, DegeneratePolicy policy) {
  std::vector<const Item*> retained;
  retained.reserve(table.num_items());
  std::size_t dropped = 0;
  for (const auto& item : table.items) {
    if (item.ratings.size() >= 2) {
      retained.push_back(&item);
    } else {
      ++dropped;
    }
  }

  RhoEstimate estimate;
  if (dropped > 0) {
    if (policy == DegeneratePolicy::Strict) {
      throw UndefinedConditionalVariance(
          std::to_string(dropped) +
          " item(s) have fewer than 2 ratings and the strict policy is in "
          "effect");
    }
    estimate.warnings.push_back(
        {WarningCode::SingleRatingItemDropped,
         "dropped " + std::to_string(dropped) +
             " item(s) with fewer than 2 ratings",
         dropped});
  }

  const std::size_t n = retained.size();
  if (n < 2) {
    throw TooFewItems("ceiling estimation needs at least 2 usable items, got " +
                      std::to_string(n));
  }

  std::vector<double> means;
  means.reserve(n);
  std::size_t min_ratings = retained.front()->ratings.size();
  for (const Item* item : retained) {
    means.push_back(item_mean(*item));
    min_ratings = std::min(min_ratings, item->ratings.size());
  }
  estimate.var_y = sample_variance(means);
  if (estimate.var_y == 0.0) {
    throw DegenerateVariance(
        "item means are constant; the correlation ceiling is undefined");
  }

  CompensatedSum cond;
  for (const Item* item : retained) {
    cond.add(item_conditional_variance(*item));
  }
  estimate.expected_cond_var = cond.value() / static_cast<double>(n);
  estimate.var_yhat_raw = estimate.var_y - estimate.expected_cond_var;
  estimate.clamped = estimate.var_yhat_raw < 0.0;

  const double var_yhat = estimate.clamped ? 0.0 : estimate.var_yhat_raw;
  double rho = std::sqrt(var_yhat / estimate.var_y);
  if (rho > 1.0) rho = 1.0;
  estimate.rho = rho;

  if (n < kRecommendedMinItems) {
    estimate.warnings.push_back(
        {WarningCode::FewItems,
         "estimate uses " + std::to_string(n) + " item(s); at least " +
             std::to_string(kRecommendedMinItems) + " are recommended",
         n});
  }
  if (min_ratings < kRecommendedMinRatingsPerItem) {
    std::size_t below = 0;
    for (const Item* item : retained) {
      if (item->ratings.size() < kRecommendedMinRatingsPerItem) ++below;
    }
    estimate.warnings.push_back(
        {WarningCode::FewRatings,
         std::to_string(below) + " item(s) have fewer than " +
             std::to_string(kRecommendedMinRatingsPerItem) + " ratings",
         below});
  }
  if (estimate.clamped) {
    estimate.warnings.push_back(
        {WarningCode::ClampedVariance,
         "rating noise exceeds the variance of the item means; the ceiling "
         "is clamped to 0",
         1});
  }
  return estimate;
}

}  // namespace rhoperfect
