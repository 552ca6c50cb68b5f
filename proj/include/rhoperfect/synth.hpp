#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rhoperfect/types.hpp"

namespace rhoperfect {

// Inclusive integer range; fixed value when lo == hi.
struct IntRange {
  int lo = 0;
  int hi = 0;
};

// Uniform real range; degenerate (constant) when lo == hi.
struct RealRange {
  double lo = 0.0;
  double hi = 0.0;
};

enum class NoiseFamily {
  Gaussian,
  UniformSymmetric,  // uniform on [-sqrt(3) s, sqrt(3) s], std s
};

enum class SynthMode {
  Exact,         // ratings are mu_i + eps exactly; keeps the closed form valid
  RealisticMos,  // clip to [1, 5] and round to the discrete MOS scale
};

struct SynthSpec {
  std::size_t num_items = 0;
  IntRange ratings_per_item;    // all values must be >= 2
  RealRange latent_mean_dist;   // mu_i
  RealRange noise_sigma_dist;   // per-item sigma_i (heteroscedasticity)
  NoiseFamily noise_family = NoiseFamily::Gaussian;
  std::uint64_t seed = 0;
  std::size_t num_raters = 0;  // 0: a fresh rater per rating; >0: shared pool
  SynthMode mode = SynthMode::Exact;
};

// Throws SpecError on invalid parameters.
void validate(const SynthSpec& spec);

SynthSpec parse_synth_spec(std::string_view json_text);
SynthSpec load_synth_spec(const std::string& path);

// The generating parameters actually realized: mu_i is the value a perfect
// predictor would output for item i.
struct GroundTruth {
  std::vector<double> mu;
  std::vector<double> sigma;
  std::vector<int> m;
};

// r_ij = mu_i + eps_ij with eps_ij independent, mean zero, std sigma_i.
// Deterministic in spec.seed.
std::pair<RatingsTable, GroundTruth> generate(const SynthSpec& spec);

void write_ground_truth_csv(const GroundTruth& truth,
                            const RatingsTable& table,
                            const std::string& path);

// Closed-form ceiling for the realized items:
//   sqrt(Var(mu) / (Var(mu) + mean_i(sigma_i^2 / m_i)))
// with Var(mu) the unbiased sample variance over items, which makes the
// split between signal and noise match the estimator's expectation.
double true_rho(const GroundTruth& truth);

struct OracleResult {
  double estimated_rho_mean = 0.0;
  double true_rho = 0.0;  // mean of the per-trial closed forms
  double abs_gap = 0.0;

  struct TrialRow {
    std::uint64_t trial = 0;
    double estimated = 0.0;
    double truth = 0.0;
  };
  std::size_t trials = 0;
  std::vector<TrialRow> per_trial;
};

struct OracleOptions {
  std::size_t threads = 1;  // 0 = hardware concurrency
};

// Regenerates `trials` independent datasets (trial t runs with the key
// derived from (spec.seed, t)) and compares the mean ceiling estimate with
// the closed form.
OracleResult oracle_check(const SynthSpec& spec, std::size_t trials,
                          const OracleOptions& options = {});

}  // namespace rhoperfect
