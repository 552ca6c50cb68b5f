#include "rhoperfect/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "rhoperfect/core.hpp"
#include "rhoperfect/errors.hpp"
#include "rhoperfect/ingest.hpp"
#include "rhoperfect/rng.hpp"

namespace rhoperfect {

namespace {

std::string fmt(const char* format, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), format, v);
  return buf;
}

std::string mean_std_text(const MeanStd& ms) {
  return fmt("%.4f", ms.mean) + " +/- " + fmt("%.4f", ms.std);
}

void append_warnings(std::string& out, const std::vector<Warning>& warnings) {
  for (const auto& w : warnings) {
    out += "warning [";
    out += to_string(w.code);
    out += "]: ";
    out += w.detail;
    out += '\n';
  }
}

// Computes one subset row over the items covered by predictions.
SubsetRow make_subset_row(const std::string& label,
                          const RatingsTable& sub,
                          const std::map<std::string, double>& predictions) {
  SubsetRow row;
  row.condition = label;

  RatingsTable covered;
  covered.scale_hint = sub.scale_hint;
  std::vector<double> preds;
  for (const auto& item : sub.items) {
    const auto it = predictions.find(item.item_id);
    if (it == predictions.end()) continue;
    covered.items.push_back(item);
    preds.push_back(it->second);
  }
  row.n_items = covered.num_items();
  if (row.n_items < 2) {
    row.skip_reason = "fewer than 2 items with predictions";
    return row;
  }

  try {
    std::vector<double> means;
    means.reserve(covered.num_items());
    for (const auto& item : covered.items) means.push_back(item_mean(item));
    row.model_pcc = pearson_corr(preds, means);

    const RhoEstimate estimate = rho_perfect(covered);
    row.rho = estimate.rho;
    row.warnings = estimate.warnings;
  } catch (const Error& e) {
    row.model_pcc.reset();
    row.rho.reset();
    row.skip_reason = e.what();
  }
  return row;
}

}  // namespace

SubsetReport build_subset_report(
    const RatingsTable& table,
    const std::map<std::string, double>& predictions, bool per_condition) {
  std::size_t covered = 0;
  for (const auto& item : table.items) {
    if (predictions.count(item.item_id)) ++covered;
  }
  if (covered == 0) {
    throw EmptyIntersection("predictions cover no item in the table");
  }

  SubsetReport report;
  report.rows.push_back(make_subset_row("all", table, predictions));
  if (!per_condition) return report;

  std::set<std::string> tags;
  for (const auto& item : table.items) {
    tags.insert(item.condition_tags.begin(), item.condition_tags.end());
  }
  for (const auto& tag : tags) {
    report.rows.push_back(make_subset_row(tag, subset(table, tag), predictions));
  }
  return report;
}

nlohmann::json to_json(const Warning& w) {
  return {{"code", std::string(to_string(w.code))},
          {"detail", w.detail},
          {"affected_count", w.affected_count}};
}

nlohmann::json to_json(const RhoEstimate& e) {
  nlohmann::json warnings = nlohmann::json::array();
  for (const auto& w : e.warnings) warnings.push_back(to_json(w));
  return {{"rho", e.rho},
          {"var_y", e.var_y},
          {"var_yhat_raw", e.var_yhat_raw},
          {"expected_cond_var", e.expected_cond_var},
          {"clamped", e.clamped},
          {"warnings", std::move(warnings)}};
}

nlohmann::json to_json(const CondCovEstimate& c) {
  return {{"mean_cov", c.mean_cov},
          {"mechanical_offset", c.mechanical_offset},
          {"excess_mean", c.excess_mean},
          {"excess_se", c.excess_se},
          {"items_used", c.items_used},
          {"num_resplits", c.num_resplits}};
}

nlohmann::json to_json(const ValidationReport& r) {
  nlohmann::json per_seed = nlohmann::json::array();
  for (const auto& row : r.per_seed) {
    per_seed.push_back({{"seed", row.seed},
                        {"rho_sq", row.rho_sq},
                        {"retest_corr", row.retest_corr}});
  }
  return {{"method", std::string(to_string(r.method))},
          {"num_seeds", r.num_seeds},
          {"rho_sq_mean", r.rho_sq_mean},
          {"rho_sq_std", r.rho_sq_std},
          {"retest_corr_mean", r.retest_corr_mean},
          {"retest_corr_std", r.retest_corr_std},
          {"cond_cov_mean", r.cond_cov_mean},
          {"cond_cov_detail", to_json(r.cond_cov)},
          {"per_seed", std::move(per_seed)},
          {"failed_seeds", r.failed_seeds}};
}

nlohmann::json to_json(const ComparisonReport& r) {
  auto ms = [](const MeanStd& v) {
    return nlohmann::json{{"mean", v.mean}, {"std", v.std}};
  };
  nlohmann::json per_seed = nlohmann::json::array();
  for (const auto& row : r.per_seed) {
    per_seed.push_back({{"seed", row.seed},
                        {"retest_corr", row.retest_corr},
                        {"icc2k", row.icc2k},
                        {"subsampling", row.subsampling},
                        {"rho_sq", row.rho_sq}});
  }
  return {{"num_seeds", r.num_seeds},
          {"retest_corr", ms(r.retest_corr)},
          {"icc2k", ms(r.icc2k)},
          {"subsampling", ms(r.subsampling)},
          {"rho_sq", ms(r.rho_sq)},
          {"balancing_note", r.balancing_note},
          {"per_seed", std::move(per_seed)},
          {"failed_seeds", r.failed_seeds}};
}

nlohmann::json to_json(const SubsetReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json warnings = nlohmann::json::array();
    for (const auto& w : row.warnings) warnings.push_back(to_json(w));
    nlohmann::json j{{"condition", row.condition},
                     {"n_items", row.n_items},
                     {"warnings", std::move(warnings)}};
    j["model_pcc"] =
        row.model_pcc ? nlohmann::json(*row.model_pcc) : nlohmann::json();
    j["rho_perfect"] = row.rho ? nlohmann::json(*row.rho) : nlohmann::json();
    j["skip_reason"] = row.skip_reason.empty() ? nlohmann::json()
                                               : nlohmann::json(row.skip_reason);
    rows.push_back(std::move(j));
  }
  return {{"rows", std::move(rows)}};
}

nlohmann::json to_json(const OracleResult& r) {
  nlohmann::json per_trial = nlohmann::json::array();
  for (const auto& row : r.per_trial) {
    per_trial.push_back({{"trial", row.trial},
                         {"estimated", row.estimated},
                         {"truth", row.truth}});
  }
  return {{"estimated_rho_mean", r.estimated_rho_mean},
          {"true_rho", r.true_rho},
          {"abs_gap", r.abs_gap},
          {"trials", r.trials},
          {"per_trial", std::move(per_trial)}};
}

nlohmann::json to_json(const IngestStats& s) {
  return {{"rows_read", s.rows_read},
          {"rows_rejected", s.rows_rejected},
          {"items_seen", s.items_seen},
          {"items_kept", s.items_kept},
          {"items_dropped", s.items_dropped},
          {"ratings_kept", s.ratings_kept},
          {"min_ratings", s.min_ratings},
          {"max_ratings", s.max_ratings},
          {"mean_ratings", s.mean_ratings}};
}

std::string render_text(const RhoEstimate& e) {
  std::string out;
  out += "rho-perfect          " + fmt("%.6f", e.rho) + "\n";
  out += "var(Y)               " + fmt("%.6g", e.var_y) + "\n";
  out += "var(Yhat) raw        " + fmt("%.6g", e.var_yhat_raw) +
         (e.clamped ? "  (clamped to 0)" : "") + "\n";
  out += "E[var(Y|X)]          " + fmt("%.6g", e.expected_cond_var) + "\n";
  append_warnings(out, e.warnings);
  return out;
}

std::string render_text(const ValidationReport& r) {
  std::string out;
  out += "method               ";
  out += to_string(r.method);
  out += "\n";
  out += "seeds used           " + std::to_string(r.num_seeds) + "\n";
  out += "rho^2 (first half)   " +
         mean_std_text({r.rho_sq_mean, r.rho_sq_std}) + "\n";
  out += "corr(Y1, Y2)         " +
         mean_std_text({r.retest_corr_mean, r.retest_corr_std}) + "\n";
  out += "E[cov(Y1,Y2|X)]      " + fmt("%.3e", r.cond_cov_mean) +
         "  (mechanical offset " + fmt("%.3e", r.cond_cov.mechanical_offset) +
         ", excess " + fmt("%.3e", r.cond_cov.excess_mean) + " +/- " +
         fmt("%.3e", r.cond_cov.excess_se) + ")\n";
  if (!r.failed_seeds.empty()) {
    out += "failed seeds         " + std::to_string(r.failed_seeds.size()) + "\n";
  }
  return out;
}

std::string render_text(const ComparisonReport& r) {
  std::string out;
  out += "seeds used           " + std::to_string(r.num_seeds) + "\n";
  out += "corr(Y1, Y2)         " + mean_std_text(r.retest_corr) + "\n";
  out += "ICC(2,k)             " + mean_std_text(r.icc2k) + "\n";
  out += "subsampling          " + mean_std_text(r.subsampling) + "\n";
  out += "rho^2 (first half)   " + mean_std_text(r.rho_sq) + "\n";
  out += "note: " + r.balancing_note + "\n";
  if (!r.failed_seeds.empty()) {
    out += "failed seeds         " + std::to_string(r.failed_seeds.size()) + "\n";
  }
  return out;
}

std::string render_text(const SubsetReport& r) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-24s %8s %12s %12s\n", "condition",
                "items", "model pcc", "rho-perfect");
  out += buf;
  for (const auto& row : r.rows) {
    if (row.skip_reason.empty()) {
      std::snprintf(buf, sizeof(buf), "%-24s %8zu %12.4f %12.4f\n",
                    row.condition.c_str(), row.n_items,
                    row.model_pcc.value_or(0.0), row.rho.value_or(0.0));
      out += buf;
    } else {
      std::snprintf(buf, sizeof(buf), "%-24s %8zu %25s\n",
                    row.condition.c_str(), row.n_items,
                    ("skipped: " + row.skip_reason).c_str());
      out += buf;
    }
    append_warnings(out, row.warnings);
  }
  return out;
}

std::string render_text(const OracleResult& r) {
  std::string out;
  out += "trials               " + std::to_string(r.trials) + "\n";
  out += "mean rho estimate    " + fmt("%.6f", r.estimated_rho_mean) + "\n";
  out += "closed-form rho      " + fmt("%.6f", r.true_rho) + "\n";
  out += "absolute gap         " + fmt("%.6f", r.abs_gap) + "\n";
  return out;
}

nlohmann::json to_json(const ReportEnvelope& envelope) {
  return {{"command", envelope.command},
          {"inputs", envelope.inputs},
          {"seeds", envelope.seeds},
          {"tool_version", envelope.tool_version},
          {"body", envelope.body}};
}

ReportEnvelope envelope_from_json(const nlohmann::json& j) {
  ReportEnvelope envelope;
  envelope.command = j.at("command").get<std::string>();
  envelope.inputs = j.at("inputs");
  envelope.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  envelope.tool_version = j.at("tool_version").get<std::string>();
  envelope.body = j.at("body");
  return envelope;
}

std::string options_hash(const nlohmann::json& options) {
  const std::uint64_t h = rng::fnv1a64(options.dump());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace rhoperfect
