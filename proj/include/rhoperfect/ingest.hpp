#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rhoperfect/types.hpp"

namespace rhoperfect {

// Column selectors: a header name, or a 0-based index given as digits
// (required when the file has no header).
struct ColumnMapping {
  std::string item = "item";
  std::string rater = "rater";
  std::string value = "value";
  std::string condition;  // empty: no condition column
};

struct IngestOptions {
  std::size_t min_ratings_per_item = 2;
  bool per_rater_aggregate = false;  // mean of repeated (item, rater) ratings
  ColumnMapping columns;
  char delimiter = ',';
  bool has_header = true;
  bool fail_fast = false;  // abort on the first malformed row
};

struct RejectedRow {
  std::size_t line = 0;  // 1-based
  std::string reason;
};

struct IngestStats {
  std::size_t rows_read = 0;
  std::size_t rows_rejected = 0;
  std::vector<RejectedRow> rejections;
  std::size_t items_seen = 0;
  std::size_t items_kept = 0;
  std::size_t items_dropped = 0;  // below min_ratings_per_item
  std::size_t ratings_kept = 0;
  // Rating-count distribution over kept items.
  std::size_t min_ratings = 0;
  std::size_t max_ratings = 0;
  double mean_ratings = 0.0;
};

// Long format: one rating per row. Items and ratings keep file order.
// A condition field may hold several tags separated by ';'.
std::pair<RatingsTable, IngestStats> parse_long_csv(
    const std::string& path, const IngestOptions& options = {});

// JSON-lines alternative; objects with fields item, rater, value and an
// optional condition (string or array of strings).
std::pair<RatingsTable, IngestStats> parse_long_jsonl(
    const std::string& path, const IngestOptions& options = {});

struct PredictionsResult {
  std::map<std::string, double> values;  // item_id -> prediction
  std::size_t duplicates = 0;            // repeated items (last one wins)
  IngestStats stats;
};

// Reads (item, prediction) pairs; uses options.columns.item/.value.
PredictionsResult parse_predictions_csv(const std::string& path,
                                        const IngestOptions& options = {});

// Items whose condition_tags contain tag. May be empty.
RatingsTable subset(const RatingsTable& table, std::string_view tag);

// Round-trippable export (shortest exact decimal form for values).
void write_long_csv(const RatingsTable& table, const std::string& path);
void write_long_jsonl(const RatingsTable& table, const std::string& path);

}  // namespace rhoperfect
