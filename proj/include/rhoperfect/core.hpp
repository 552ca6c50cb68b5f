#pragma once

#include <vector>

#include "rhoperfect/types.hpp"

namespace rhoperfect {

// Arithmetic mean of an item's ratings (y_i).
double item_mean(const Item& item);

// Unbiased variance of the per-item means, Var(Y). Needs >= 2 items.
double grand_variance(const RatingsTable& table);

// Variance of the item's mean rating under independent raters:
// s^2 / m_i = sum_j (r_j - y_i)^2 / (m_i (m_i - 1)). Needs m_i >= 2.
double item_conditional_variance(const Item& item);

// Unweighted mean of item_conditional_variance over all items.
double expected_conditional_variance(const RatingsTable& table);

// Dataset-size guidance checks; never mutates the table.
std::vector<Warning> validate_table(const RatingsTable& table);

// The correlation ceiling estimate:
//   rho = sqrt(max(Var(Y) - E[Var(Y|X)], 0) / Var(Y)).
// Items with a single rating are dropped or rejected per policy.
RhoEstimate rho_perfect(
    const RatingsTable& table,
    DegeneratePolicy policy = DegeneratePolicy::DropSingleRatingItems);

}  // namespace rhoperfect
