// Command-line front end: estimates the correlation ceiling of
// subjectively rated datasets and runs the split-based validation,
// baseline comparison, subset and synthetic-oracle analyses.

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rhoperfect/baselines.hpp"
#include "rhoperfect/core.hpp"
#include "rhoperfect/errors.hpp"
#include "rhoperfect/ingest.hpp"
#include "rhoperfect/report.hpp"
#include "rhoperfect/split.hpp"
#include "rhoperfect/synth.hpp"

namespace {

using nlohmann::json;
using namespace rhoperfect;

constexpr int kExitUsage = 1;
constexpr int kExitParse = 2;
constexpr int kExitDegenerate = 3;
constexpr int kExitCannotSplit = 4;
constexpr int kExitSpec = 5;

struct ErrorInfo {
  const char* kind;
  int exit_code;
};

ErrorInfo classify(const Error& e) {
  if (dynamic_cast<const ParseError*>(&e)) return {"parse", kExitParse};
  if (dynamic_cast<const IoError*>(&e)) return {"io", kExitParse};
  if (dynamic_cast<const ShapeError*>(&e)) return {"shape", kExitParse};
  if (dynamic_cast<const DegenerateVariance*>(&e)) {
    return {"degenerate-variance", kExitDegenerate};
  }
  if (dynamic_cast<const TooFewItems*>(&e)) {
    return {"too-few-items", kExitDegenerate};
  }
  if (dynamic_cast<const EmptyItem*>(&e)) return {"empty-item", kExitDegenerate};
  if (dynamic_cast<const UndefinedConditionalVariance*>(&e)) {
    return {"undefined-conditional-variance", kExitDegenerate};
  }
  if (dynamic_cast<const EmptyIntersection*>(&e)) {
    return {"empty-intersection", kExitDegenerate};
  }
  if (dynamic_cast<const CannotSplit*>(&e)) {
    return {"cannot-split", kExitCannotSplit};
  }
  if (dynamic_cast<const CannotBalance*>(&e)) {
    return {"cannot-balance", kExitCannotSplit};
  }
  if (dynamic_cast<const SpecError*>(&e)) return {"spec", kExitSpec};
  return {"error", kExitUsage};
}

struct IngestFlags {
  std::string item_col = "item";
  std::string rater_col = "rater";
  std::string value_col = "value";
  std::string condition_col;
  std::string delimiter = ",";
  bool no_header = false;
  std::size_t min_ratings = 2;
  bool aggregate_raters = false;
  bool fail_fast = false;
  bool jsonl = false;

  IngestOptions to_options() const {
    IngestOptions options;
    options.columns.item = item_col;
    options.columns.rater = rater_col;
    options.columns.value = value_col;
    options.columns.condition = condition_col;
    if (delimiter.size() != 1) {
      throw SpecError("--delimiter must be a single character");
    }
    options.delimiter = delimiter[0];
    options.has_header = !no_header;
    options.min_ratings_per_item = min_ratings;
    options.per_rater_aggregate = aggregate_raters;
    options.fail_fast = fail_fast;
    return options;
  }

  json to_json() const {
    return {{"item_col", item_col},
            {"rater_col", rater_col},
            {"value_col", value_col},
            {"condition_col", condition_col},
            {"delimiter", delimiter},
            {"has_header", !no_header},
            {"min_ratings", min_ratings},
            {"aggregate_raters", aggregate_raters},
            {"fail_fast", fail_fast},
            {"jsonl", jsonl}};
  }
};

void add_ingest_flags(CLI::App* cmd, IngestFlags& flags) {
  cmd->add_option("--item-col", flags.item_col,
                  "Item column (name or 0-based index)");
  cmd->add_option("--rater-col", flags.rater_col,
                  "Rater column (name or 0-based index)");
  cmd->add_option("--value-col", flags.value_col,
                  "Value column (name or 0-based index)");
  cmd->add_option("--condition-col", flags.condition_col,
                  "Condition-tag column; tags may be ';'-separated");
  cmd->add_option("--delimiter", flags.delimiter, "Field delimiter");
  cmd->add_flag("--no-header", flags.no_header,
                "File has no header row (columns must be indices)");
  cmd->add_option("--min-ratings", flags.min_ratings,
                  "Drop items with fewer ratings (default 2)");
  cmd->add_flag("--aggregate-raters", flags.aggregate_raters,
                "Average repeated ratings of the same (item, rater) pair");
  cmd->add_flag("--fail-fast", flags.fail_fast,
                "Abort on the first malformed row");
  cmd->add_flag("--jsonl", flags.jsonl,
                "Input is JSON lines instead of CSV");
}

std::pair<RatingsTable, IngestStats> load_table(const std::string& path,
                                                const IngestFlags& flags) {
  const IngestOptions options = flags.to_options();
  return flags.jsonl ? parse_long_jsonl(path, options)
                     : parse_long_csv(path, options);
}

std::vector<std::uint64_t> expand_seeds(std::uint64_t seed,
                                        std::size_t num_seeds) {
  if (num_seeds < 1) throw SpecError("--num-seeds must be at least 1");
  std::vector<std::uint64_t> seeds(num_seeds);
  for (std::size_t i = 0; i < num_seeds; ++i) {
    seeds[i] = seed + static_cast<std::uint64_t>(i);
  }
  return seeds;
}

void emit(const ReportEnvelope& envelope, const std::string& format,
          const std::string& text_body) {
  if (format == "json") {
    std::cout << to_json(envelope).dump(2) << "\n";
  } else {
    std::cout << "command: " << envelope.command << "\n" << text_body;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Correlation-ceiling analysis for subjectively rated datasets"};
  app.require_subcommand(1);

  std::string format = "json";
  app.add_option("--format", format, "Output format")
      ->check(CLI::IsMember({"json", "table"}))
      ->capture_default_str();
  app.fallthrough();

  // compute
  auto* compute = app.add_subcommand(
      "compute", "Estimate the correlation ceiling of a ratings file");
  std::string compute_input;
  std::string compute_policy = "drop";
  IngestFlags compute_ingest;
  compute->add_option("--input", compute_input, "Long-format ratings file")
      ->required();
  compute->add_option("--policy", compute_policy,
                      "Items with a single rating: drop them or fail")
      ->check(CLI::IsMember({"drop", "strict"}));
  add_ingest_flags(compute, compute_ingest);

  // validate
  auto* validate_cmd = app.add_subcommand(
      "validate", "Split-based test-retest validation of the ceiling");
  std::string validate_input;
  std::string validate_method = "raters";
  std::uint64_t validate_seed = 1;
  std::size_t validate_num_seeds = 10;
  std::size_t validate_cov_resplits = 20;
  std::size_t validate_threads = 0;
  IngestFlags validate_ingest;
  validate_cmd->add_option("--input", validate_input, "Long-format ratings file")
      ->required();
  validate_cmd->add_option("--method", validate_method, "Split method")
      ->check(CLI::IsMember({"raters", "ratings"}));
  validate_cmd->add_option("--seed", validate_seed, "Base seed")
      ->envname("RHO_PERFECT_SEED");
  validate_cmd->add_option("--num-seeds", validate_num_seeds,
                           "Seeds seed..seed+N-1 are run");
  validate_cmd->add_option("--cov-resplits", validate_cov_resplits,
                           "Resplits for the conditional-covariance check");
  validate_cmd->add_option("--threads", validate_threads,
                           "Worker threads (0 = hardware)");
  add_ingest_flags(validate_cmd, validate_ingest);

  // compare
  auto* compare = app.add_subcommand(
      "compare", "Compare the ceiling against ICC(2,k) and subsampling");
  std::string compare_input;
  std::uint64_t compare_seed = 1;
  std::size_t compare_num_seeds = 10;
  std::size_t compare_iters = 10;
  std::size_t compare_threads = 0;
  IngestFlags compare_ingest;
  compare->add_option("--input", compare_input, "Long-format ratings file")
      ->required();
  compare->add_option("--seed", compare_seed, "Base seed")
      ->envname("RHO_PERFECT_SEED");
  compare->add_option("--num-seeds", compare_num_seeds,
                      "Seeds seed..seed+N-1 are run");
  compare->add_option("--subsample-iters", compare_iters,
                      "Iterations of the subsampling baseline");
  compare->add_option("--threads", compare_threads,
                      "Worker threads (0 = hardware)");
  add_ingest_flags(compare, compare_ingest);

  // subset-report
  auto* subset_cmd = app.add_subcommand(
      "subset-report", "Model correlation next to the ceiling, per condition");
  std::string subset_input;
  std::string subset_predictions;
  std::string pred_item_col = "item";
  std::string pred_value_col = "value";
  bool by_condition = false;
  IngestFlags subset_ingest;
  subset_cmd->add_option("--input", subset_input, "Long-format ratings file")
      ->required();
  subset_cmd
      ->add_option("--predictions", subset_predictions,
                   "CSV with per-item model predictions")
      ->required();
  subset_cmd->add_option("--pred-item-col", pred_item_col,
                         "Item column of the predictions file");
  subset_cmd->add_option("--pred-value-col", pred_value_col,
                         "Prediction column of the predictions file");
  subset_cmd->add_flag("--by-condition", by_condition,
                       "Add one row per condition tag");
  add_ingest_flags(subset_cmd, subset_ingest);

  // synth
  auto* synth_cmd = app.add_subcommand(
      "synth", "Check the estimator against synthetic data with known truth");
  std::string synth_spec_path;
  std::size_t synth_trials = 20;
  std::size_t synth_threads = 0;
  std::string synth_out_table;
  std::string synth_out_truth;
  synth_cmd->add_option("--spec", synth_spec_path, "JSON generator spec")
      ->required();
  synth_cmd->add_option("--trials", synth_trials, "Independent generations");
  synth_cmd->add_option("--threads", synth_threads,
                        "Worker threads (0 = hardware)");
  synth_cmd->add_option("--out-table", synth_out_table,
                        "Also write one generated table as long CSV");
  synth_cmd->add_option("--out-truth", synth_out_truth,
                        "Also write the generating parameters as CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*compute) {
      const auto [table, stats] = load_table(compute_input, compute_ingest);
      const DegeneratePolicy policy =
          compute_policy == "strict" ? DegeneratePolicy::Strict
                                     : DegeneratePolicy::DropSingleRatingItems;
      const RhoEstimate estimate = rho_perfect(table, policy);

      ReportEnvelope envelope;
      envelope.command = "compute";
      json opts = compute_ingest.to_json();
      opts["policy"] = compute_policy;
      envelope.inputs = {{"ratings_path", compute_input},
                         {"options_hash", options_hash(opts)},
                         {"ingest", to_json(stats)}};
      envelope.body = to_json(estimate);
      emit(envelope, format, render_text(estimate));
    } else if (*validate_cmd) {
      const auto [table, stats] = load_table(validate_input, validate_ingest);
      const SplitMethod method = split_method_from_string(validate_method);
      const auto seeds = expand_seeds(validate_seed, validate_num_seeds);
      ValidationOptions options;
      options.cov_resplits = validate_cov_resplits;
      options.threads = validate_threads;
      const ValidationReport report =
          run_validation(table, method, seeds, options);
      if (!report.failed_seeds.empty()) {
        std::cerr << "warning: " << report.failed_seeds.size()
                  << " seed(s) excluded because their split degenerated\n";
      }

      ReportEnvelope envelope;
      envelope.command = "validate";
      json opts = validate_ingest.to_json();
      opts["method"] = validate_method;
      opts["cov_resplits"] = validate_cov_resplits;
      envelope.inputs = {{"ratings_path", validate_input},
                         {"options_hash", options_hash(opts)},
                         {"ingest", to_json(stats)}};
      envelope.seeds = seeds;
      envelope.body = to_json(report);
      emit(envelope, format, render_text(report));
    } else if (*compare) {
      const auto [table, stats] = load_table(compare_input, compare_ingest);
      const auto seeds = expand_seeds(compare_seed, compare_num_seeds);
      CompareOptions options;
      options.subsample_iterations = compare_iters;
      options.threads = compare_threads;
      const ComparisonReport report = compare_report(table, seeds, options);
      if (!report.failed_seeds.empty()) {
        std::cerr << "warning: " << report.failed_seeds.size()
                  << " seed(s) excluded because their split degenerated\n";
      }

      ReportEnvelope envelope;
      envelope.command = "compare";
      json opts = compare_ingest.to_json();
      opts["subsample_iters"] = compare_iters;
      envelope.inputs = {{"ratings_path", compare_input},
                         {"options_hash", options_hash(opts)},
                         {"ingest", to_json(stats)}};
      envelope.seeds = seeds;
      envelope.body = to_json(report);
      emit(envelope, format, render_text(report));
    } else if (*subset_cmd) {
      const auto [table, stats] = load_table(subset_input, subset_ingest);
      IngestOptions pred_options = subset_ingest.to_options();
      pred_options.columns.item = pred_item_col;
      pred_options.columns.value = pred_value_col;
      const PredictionsResult predictions =
          parse_predictions_csv(subset_predictions, pred_options);
      if (predictions.duplicates > 0) {
        std::cerr << "warning: " << predictions.duplicates
                  << " duplicate prediction row(s); the last one wins\n";
      }
      const SubsetReport report =
          build_subset_report(table, predictions.values, by_condition);

      ReportEnvelope envelope;
      envelope.command = "subset-report";
      json opts = subset_ingest.to_json();
      opts["pred_item_col"] = pred_item_col;
      opts["pred_value_col"] = pred_value_col;
      opts["by_condition"] = by_condition;
      envelope.inputs = {{"ratings_path", subset_input},
                         {"predictions_path", subset_predictions},
                         {"options_hash", options_hash(opts)},
                         {"ingest", to_json(stats)},
                         {"predictions_ingest", to_json(predictions.stats)}};
      envelope.body = to_json(report);
      emit(envelope, format, render_text(report));
    } else if (*synth_cmd) {
      const SynthSpec spec = load_synth_spec(synth_spec_path);
      OracleOptions options;
      options.threads = synth_threads;
      const OracleResult result = oracle_check(spec, synth_trials, options);
      if (!synth_out_table.empty() || !synth_out_truth.empty()) {
        const auto [table, truth] = generate(spec);
        if (!synth_out_table.empty()) write_long_csv(table, synth_out_table);
        if (!synth_out_truth.empty()) {
          write_ground_truth_csv(truth, table, synth_out_truth);
        }
      }

      ReportEnvelope envelope;
      envelope.command = "synth";
      envelope.inputs = {{"spec_path", synth_spec_path},
                         {"options_hash",
                          options_hash({{"trials", synth_trials}})}};
      envelope.seeds = {spec.seed};
      envelope.body = to_json(result);
      emit(envelope, format, render_text(result));
    }
  } catch (const Error& e) {
    const ErrorInfo info = classify(e);
    std::cerr << "error (" << info.kind << "): " << e.what() << "\n";
    return info.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return 0;
}
