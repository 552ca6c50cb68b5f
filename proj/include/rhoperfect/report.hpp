#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "rhoperfect/baselines.hpp"
#include "rhoperfect/ingest.hpp"
#include "rhoperfect/split.hpp"
#include "rhoperfect/synth.hpp"
#include "rhoperfect/types.hpp"

namespace rhoperfect {

inline constexpr std::string_view kToolVersion = "0.1.0";

// Model performance next to the ceiling, per condition subset.
struct SubsetRow {
  std::string condition;  // "all" or a tag
  std::size_t n_items = 0;
  std::optional<double> model_pcc;
  std::optional<double> rho;
  std::vector<Warning> warnings;
  std::string skip_reason;  // empty when the row was computed
};

struct SubsetReport {
  std::vector<SubsetRow> rows;
};

// One row per condition tag plus "all" (tag rows only when per_condition).
// Both the model correlation and the ceiling are computed over the items
// covered by predictions; conditions with fewer than 2 covered items are
// reported as skipped. Throws EmptyIntersection when predictions cover no
// item at all.
SubsetReport build_subset_report(const RatingsTable& table,
                                 const std::map<std::string, double>& predictions,
                                 bool per_condition = true);

// JSON forms (stable schema; keys are emitted in sorted order).
nlohmann::json to_json(const Warning& w);
nlohmann::json to_json(const RhoEstimate& e);
nlohmann::json to_json(const CondCovEstimate& c);
nlohmann::json to_json(const ValidationReport& r);
nlohmann::json to_json(const ComparisonReport& r);
nlohmann::json to_json(const SubsetReport& r);
nlohmann::json to_json(const OracleResult& r);
nlohmann::json to_json(const IngestStats& s);

// Human-oriented tables (layout may evolve; JSON is the contract).
std::string render_text(const RhoEstimate& e);
std::string render_text(const ValidationReport& r);
std::string render_text(const ComparisonReport& r);
std::string render_text(const SubsetReport& r);
std::string render_text(const OracleResult& r);

// Top-level wrapper for every CLI command. Timestamps are omitted so that
// identical inputs and seeds serialize to identical bytes.
struct ReportEnvelope {
  std::string command;
  nlohmann::json inputs;  // file paths, option hash, ingest stats
  std::vector<std::uint64_t> seeds;
  std::string tool_version{kToolVersion};
  nlohmann::json body;
};

nlohmann::json to_json(const ReportEnvelope& envelope);
ReportEnvelope envelope_from_json(const nlohmann::json& j);

// FNV-1a over a canonical serialization, as a 16-digit hex string.
std::string options_hash(const nlohmann::json& options);

}  // namespace rhoperfect
