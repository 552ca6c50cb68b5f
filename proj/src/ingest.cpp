#include "rhoperfect/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "rhoperfect/errors.hpp"

namespace rhoperfect {

namespace {

// Splits one line into fields; double quotes guard embedded delimiters and
// "" escapes a quote. Returns false on an unterminated quote.
bool split_csv_line(std::string_view line, char delimiter,
                    std::vector<std::string>& fields) {
  fields.clear();
  std::string current;
  bool in_quotes = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        current += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(std::move(current));
  return !in_quotes;
}

bool parse_finite_double(std::string_view text, double& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  while (begin != end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end != begin && (end[-1] == ' ' || end[-1] == '\t')) --end;
  if (begin == end) return false;
  const auto result = std::from_chars(begin, end, out);
  return result.ec == std::errc() && result.ptr == end && std::isfinite(out);
}

bool all_digits(std::string_view s) {
  if (s.empty()) return false;
  return std::all_of(s.begin(), s.end(),
                     [](unsigned char c) { return std::isdigit(c); });
}

// Resolves a column selector (header name or digit index) to an index.
std::size_t resolve_column(const std::string& selector,
                           const std::vector<std::string>& header,
                           bool has_header, const char* what) {
  if (all_digits(selector)) {
    return static_cast<std::size_t>(std::stoull(selector));
  }
  if (!has_header) {
    throw ParseError(std::string("column for ") + what +
                     " must be a numeric index when the file has no header");
  }
  const auto it = std::find(header.begin(), header.end(), selector);
  if (it == header.end()) {
    throw ParseError(std::string("column '") + selector + "' for " + what +
                     " not found in header");
  }
  return static_cast<std::size_t>(it - header.begin());
}

void add_condition_tags(Item& item, std::string_view field) {
  std::size_t start = 0;
  while (start <= field.size()) {
    std::size_t end = field.find(';', start);
    if (end == std::string_view::npos) end = field.size();
    std::string_view tag = field.substr(start, end - start);
    while (!tag.empty() && (tag.front() == ' ' || tag.front() == '\t')) {
      tag.remove_prefix(1);
    }
    while (!tag.empty() && (tag.back() == ' ' || tag.back() == '\t')) {
      tag.remove_suffix(1);
    }
    if (!tag.empty()) item.add_tag(tag);
    if (end == field.size()) break;
    start = end + 1;
  }
}

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string csv_escape(const std::string& field, char delimiter) {
  const bool needs_quotes =
      field.find_first_of(std::string{delimiter, '"', '\n', '\r'}) !=
      std::string::npos;
  if (!needs_quotes) return field;
  std::string out = "\"";
  for (const char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

struct TableBuilder {
  RatingsTable table;
  std::unordered_map<std::string, std::size_t> index_of;

  Item& item_for(const std::string& id) {
    const auto [it, inserted] = index_of.emplace(id, table.items.size());
    if (inserted) {
      table.items.push_back(Item{id, {}, {}});
    }
    return table.items[it->second];
  }
};

void aggregate_per_rater(RatingsTable& table) {
  for (auto& item : table.items) {
    std::vector<Rating> aggregated;
    std::unordered_map<std::string_view, std::size_t> slot;
    std::vector<std::pair<double, std::size_t>> sums;  // (sum, count)
    for (const auto& r : item.ratings) {
      const auto [it, inserted] = slot.emplace(r.rater_id, aggregated.size());
      if (inserted) {
        aggregated.push_back({r.rater_id, 0.0});
        sums.push_back({0.0, 0});
      }
      sums[it->second].first += r.value;
      sums[it->second].second += 1;
    }
    for (std::size_t i = 0; i < aggregated.size(); ++i) {
      aggregated[i].value =
          sums[i].first / static_cast<double>(sums[i].second);
    }
    item.ratings = std::move(aggregated);
  }
}

void finalize(TableBuilder& builder, const IngestOptions& options,
              IngestStats& stats) {
  if (options.per_rater_aggregate) aggregate_per_rater(builder.table);

  stats.items_seen = builder.table.items.size();
  RatingsTable kept;
  kept.scale_hint = builder.table.scale_hint;
  for (auto& item : builder.table.items) {
    if (item.ratings.size() >= options.min_ratings_per_item) {
      kept.items.push_back(std::move(item));
    } else {
      ++stats.items_dropped;
    }
  }
  builder.table = std::move(kept);

  stats.items_kept = builder.table.items.size();
  if (stats.items_kept > 0) {
    std::size_t min_m = builder.table.items.front().ratings.size();
    std::size_t max_m = min_m;
    std::size_t total = 0;
    for (const auto& item : builder.table.items) {
      const std::size_t m = item.ratings.size();
      min_m = std::min(min_m, m);
      max_m = std::max(max_m, m);
      total += m;
    }
    stats.min_ratings = min_m;
    stats.max_ratings = max_m;
    stats.ratings_kept = total;
    stats.mean_ratings =
        static_cast<double>(total) / static_cast<double>(stats.items_kept);
  }
}

void reject(IngestStats& stats, const IngestOptions& options, std::size_t line,
            const std::string& reason) {
  ++stats.rows_rejected;
  stats.rejections.push_back({line, reason});
  if (options.fail_fast) {
    throw ParseError("line " + std::to_string(line) + ": " + reason);
  }
}

}  // namespace

std::pair<RatingsTable, IngestStats> parse_long_csv(
    const std::string& path, const IngestOptions& options) {
  if (options.min_ratings_per_item < 1) {
    throw SpecError("min_ratings_per_item must be at least 1");
  }
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");

  TableBuilder builder;
  IngestStats stats;
  std::string line;
  std::vector<std::string> fields;
  std::size_t line_no = 0;

  std::size_t item_col = 0;
  std::size_t rater_col = 0;
  std::size_t value_col = 0;
  std::size_t condition_col = 0;
  bool has_condition = !options.columns.condition.empty();
  bool columns_resolved = false;

  auto resolve_all = [&](const std::vector<std::string>& header) {
    item_col = resolve_column(options.columns.item, header, options.has_header,
                              "item");
    rater_col = resolve_column(options.columns.rater, header,
                               options.has_header, "rater");
    value_col = resolve_column(options.columns.value, header,
                               options.has_header, "value");
    if (has_condition) {
      condition_col = resolve_column(options.columns.condition, header,
                                     options.has_header, "condition");
    }
    columns_resolved = true;
  };

  if (!options.has_header) resolve_all({});

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    if (!split_csv_line(line, options.delimiter, fields)) {
      if (options.has_header && !columns_resolved) {
        throw ParseError("line " + std::to_string(line_no) +
                         ": unterminated quote in header");
      }
      ++stats.rows_read;
      reject(stats, options, line_no, "unterminated quote");
      continue;
    }

    if (options.has_header && !columns_resolved) {
      resolve_all(fields);
      continue;
    }

    ++stats.rows_read;
    const std::size_t needed =
        std::max({item_col, rater_col, value_col,
                  has_condition ? condition_col : std::size_t{0}});
    if (fields.size() <= needed) {
      reject(stats, options, line_no,
             "expected at least " + std::to_string(needed + 1) +
                 " field(s), got " + std::to_string(fields.size()));
      continue;
    }
    if (fields[item_col].empty()) {
      reject(stats, options, line_no, "empty item id");
      continue;
    }
    if (fields[rater_col].empty()) {
      reject(stats, options, line_no, "empty rater id");
      continue;
    }
    double value = 0.0;
    if (!parse_finite_double(fields[value_col], value)) {
      reject(stats, options, line_no,
             "value '" + fields[value_col] + "' is not a finite number");
      continue;
    }

    Item& item = builder.item_for(fields[item_col]);
    item.ratings.push_back({fields[rater_col], value});
    if (has_condition) add_condition_tags(item, fields[condition_col]);
  }
  if (in.bad()) throw IoError("error while reading '" + path + "'");
  if (options.has_header && !columns_resolved) {
    throw ParseError("'" + path + "' is empty; expected a header row");
  }

  finalize(builder, options, stats);
  return {std::move(builder.table), std::move(stats)};
}

std::pair<RatingsTable, IngestStats> parse_long_jsonl(
    const std::string& path, const IngestOptions& options) {
  if (options.min_ratings_per_item < 1) {
    throw SpecError("min_ratings_per_item must be at least 1");
  }
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");

  TableBuilder builder;
  IngestStats stats;
  std::string line;
  std::size_t line_no = 0;

  auto id_from = [](const nlohmann::json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_unsigned()) {
      return std::to_string(v.get<unsigned long long>());
    }
    throw ParseError("id fields must be strings or integers");
  };

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    ++stats.rows_read;

    nlohmann::json record;
    try {
      record = nlohmann::json::parse(line);
      if (!record.is_object()) throw ParseError("record is not an object");
      const std::string item_id = id_from(record.at("item"));
      const std::string rater_id = id_from(record.at("rater"));
      if (item_id.empty()) throw ParseError("empty item id");
      if (rater_id.empty()) throw ParseError("empty rater id");
      if (!record.at("value").is_number()) {
        throw ParseError("value is not a number");
      }
      const double value = record.at("value").get<double>();
      if (!std::isfinite(value)) throw ParseError("value is not finite");

      Item& item = builder.item_for(item_id);
      item.ratings.push_back({rater_id, value});
      if (record.contains("condition")) {
        const auto& cond = record.at("condition");
        if (cond.is_string()) {
          item.add_tag(cond.get<std::string>());
        } else if (cond.is_array()) {
          for (const auto& tag : cond) item.add_tag(tag.get<std::string>());
        }
      }
    } catch (const ParseError& e) {
      reject(stats, options, line_no, e.what());
    } catch (const nlohmann::json::exception& e) {
      reject(stats, options, line_no, e.what());
    }
  }
  if (in.bad()) throw IoError("error while reading '" + path + "'");

  finalize(builder, options, stats);
  return {std::move(builder.table), std::move(stats)};
}

PredictionsResult parse_predictions_csv(const std::string& path,
                                        const IngestOptions& options) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");

  PredictionsResult result;
  std::string line;
  std::vector<std::string> fields;
  std::size_t line_no = 0;

  std::size_t item_col = 0;
  std::size_t value_col = 0;
  bool columns_resolved = false;
  auto resolve_all = [&](const std::vector<std::string>& header) {
    item_col = resolve_column(options.columns.item, header, options.has_header,
                              "item");
    value_col = resolve_column(options.columns.value, header,
                               options.has_header, "prediction");
    columns_resolved = true;
  };
  if (!options.has_header) resolve_all({});

  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;

    if (!split_csv_line(line, options.delimiter, fields)) {
      if (options.has_header && !columns_resolved) {
        throw ParseError("line " + std::to_string(line_no) +
                         ": unterminated quote in header");
      }
      ++result.stats.rows_read;
      reject(result.stats, options, line_no, "unterminated quote");
      continue;
    }
    if (options.has_header && !columns_resolved) {
      resolve_all(fields);
      continue;
    }

    ++result.stats.rows_read;
    if (fields.size() <= std::max(item_col, value_col)) {
      reject(result.stats, options, line_no, "too few fields");
      continue;
    }
    if (fields[item_col].empty()) {
      reject(result.stats, options, line_no, "empty item id");
      continue;
    }
    double value = 0.0;
    if (!parse_finite_double(fields[value_col], value)) {
      reject(result.stats, options, line_no,
             "prediction '" + fields[value_col] + "' is not a finite number");
      continue;
    }
    const auto [it, inserted] = result.values.emplace(fields[item_col], value);
    if (!inserted) {
      it->second = value;  // last one wins
      ++result.duplicates;
    }
  }
  if (in.bad()) throw IoError("error while reading '" + path + "'");
  if (options.has_header && !columns_resolved) {
    throw ParseError("'" + path + "' is empty; expected a header row");
  }
  return result;
}

RatingsTable subset(const RatingsTable& table, std::string_view tag) {
  RatingsTable result;
  result.scale_hint = table.scale_hint;
  for (const auto& item : table.items) {
    if (item.has_tag(tag)) result.items.push_back(item);
  }
  return result;
}

void write_long_csv(const RatingsTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "item,rater,value,condition\n";
  for (const auto& item : table.items) {
    std::string tags;
    for (std::size_t t = 0; t < item.condition_tags.size(); ++t) {
      if (t) tags += ';';
      tags += item.condition_tags[t];
    }
    const std::string escaped_tags = csv_escape(tags, ',');
    for (const auto& r : item.ratings) {
      out << csv_escape(item.item_id, ',') << ',' << csv_escape(r.rater_id, ',')
          << ',' << format_double(r.value) << ',' << escaped_tags << '\n';
    }
  }
  if (!out) throw IoError("error while writing '" + path + "'");
}

void write_long_jsonl(const RatingsTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  for (const auto& item : table.items) {
    for (const auto& r : item.ratings) {
      nlohmann::json record;
      record["item"] = item.item_id;
      record["rater"] = r.rater_id;
      record["value"] = r.value;
      if (!item.condition_tags.empty()) {
        record["condition"] = item.condition_tags;
      }
      out << record.dump() << '\n';
    }
  }
  if (!out) throw IoError("error while writing '" + path + "'");
}

}  // namespace rhoperfect
