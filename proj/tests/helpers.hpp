#pragma once

#include <initializer_list>
#include <string>
#include <vector>

#include "rhoperfect/synth.hpp"
#include "rhoperfect/types.hpp"

namespace rhoperfect::testing {

// Raters are positional ("r0", "r1", ...) and therefore shared across items.
inline Item make_item(std::string id, const std::vector<double>& values) {
  Item item;
  item.item_id = std::move(id);
  for (std::size_t j = 0; j < values.size(); ++j) {
    item.ratings.push_back({"r" + std::to_string(j), values[j]});
  }
  return item;
}

inline RatingsTable make_table(
    std::initializer_list<std::vector<double>> rows) {
  RatingsTable table;
  std::size_t i = 0;
  for (const auto& row : rows) {
    table.items.push_back(make_item("item" + std::to_string(i++), row));
  }
  return table;
}

// A moderate heteroscedastic generator spec used across suites.
inline SynthSpec default_spec(std::uint64_t seed = 42) {
  SynthSpec spec;
  spec.num_items = 2000;
  spec.ratings_per_item = {3, 20};
  spec.latent_mean_dist = {1.0, 5.0};
  spec.noise_sigma_dist = {0.2, 1.5};
  spec.seed = seed;
  return spec;
}

}  // namespace rhoperfect::testing
