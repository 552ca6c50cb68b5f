#include "rhoperfect/types.hpp"

#include <algorithm>

namespace rhoperfect {

bool Item::has_tag(std::string_view tag) const {
  return std::binary_search(condition_tags.begin(), condition_tags.end(), tag);
}

void Item::add_tag(std::string_view tag) {
  const auto it =
      std::lower_bound(condition_tags.begin(), condition_tags.end(), tag);
  if (it == condition_tags.end() || *it != tag) {
    condition_tags.insert(it, std::string(tag));
  }
}

std::size_t RatingsTable::total_ratings() const {
  std::size_t total = 0;
  for (const auto& item : items) total += item.ratings.size();
  return total;
}

std::string_view to_string(WarningCode code) {
  switch (code) {
    case WarningCode::FewItems:
      return "few_items";
    case WarningCode::FewRatings:
      return "few_ratings";
    case WarningCode::ClampedVariance:
      return "clamped_variance";
    case WarningCode::SingleRatingItemDropped:
      return "single_rating_item_dropped";
  }
  return "unknown";
}

}  // namespace rhoperfect
