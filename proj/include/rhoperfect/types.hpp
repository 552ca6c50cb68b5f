#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rhoperfect {

// One subjective rating of one item.
struct Rating {
  std::string rater_id;
  double value = 0.0;

  friend bool operator==(const Rating&, const Rating&) = default;
};

struct Item {
  std::string item_id;
  std::vector<Rating> ratings;
  std::vector<std::string> condition_tags;  // kept sorted and unique

  std::size_t num_ratings() const { return ratings.size(); }
  bool has_tag(std::string_view tag) const;
  void add_tag(std::string_view tag);

  friend bool operator==(const Item&, const Item&) = default;
};

struct RatingsTable {
  std::vector<Item> items;
  std::optional<std::pair<double, double>> scale_hint;  // declared (min, max)

  std::size_t num_items() const { return items.size(); }
  std::size_t total_ratings() const;

  friend bool operator==(const RatingsTable&, const RatingsTable&) = default;
};

enum class WarningCode {
  FewItems,
  FewRatings,
  ClampedVariance,
  SingleRatingItemDropped,
};

std::string_view to_string(WarningCode code);

struct Warning {
  WarningCode code = WarningCode::FewItems;
  std::string detail;
  std::size_t affected_count = 0;

  friend bool operator==(const Warning&, const Warning&) = default;
};

// How to treat items whose conditional variance is undefined (m_i < 2).
enum class DegeneratePolicy {
  DropSingleRatingItems,  // drop them and warn
  Strict,                 // fail instead
};

struct RhoEstimate {
  double rho = 0.0;                // correlation ceiling, in [0, 1]
  double var_y = 0.0;              // Var(Y): variance of per-item mean ratings
  double var_yhat_raw = 0.0;       // Var(Y) - E[Var(Y|X)] before clamping
  double expected_cond_var = 0.0;  // E[Var(Y|X)]
  bool clamped = false;            // var_yhat_raw < 0
  std::vector<Warning> warnings;
};

// Guidance thresholds for a stable estimate.
inline constexpr std::size_t kRecommendedMinItems = 50;
inline constexpr std::size_t kRecommendedMinRatingsPerItem = 3;

}  // namespace rhoperfect
