#include "rhoperfect/synth.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rhoperfect/core.hpp"
#include "rhoperfect/errors.hpp"
#include "rhoperfect/parallel.hpp"
#include "rhoperfect/rng.hpp"
#include "rhoperfect/stats.hpp"

namespace rhoperfect {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

RealRange real_range_from_json(const nlohmann::json& j, const char* name) {
  RealRange range;
  if (j.is_number()) {
    range.lo = range.hi = j.get<double>();
    return range;
  }
  if (!j.is_object()) {
    throw SpecError(std::string(name) + " must be a number or {lo, hi}");
  }
  if (j.contains("fixed")) {
    range.lo = range.hi = j.at("fixed").get<double>();
    return range;
  }
  range.lo = j.at("lo").get<double>();
  range.hi = j.at("hi").get<double>();
  return range;
}

IntRange int_range_from_json(const nlohmann::json& j, const char* name) {
  IntRange range;
  if (j.is_number_integer()) {
    range.lo = range.hi = j.get<int>();
    return range;
  }
  if (!j.is_object()) {
    throw SpecError(std::string(name) + " must be an integer or {lo, hi}");
  }
  if (j.contains("fixed")) {
    range.lo = range.hi = j.at("fixed").get<int>();
    return range;
  }
  range.lo = j.at("lo").get<int>();
  range.hi = j.at("hi").get<int>();
  return range;
}

std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void validate(const SynthSpec& spec) {
  if (spec.num_items < 2) {
    throw SpecError("num_items must be at least 2, got " +
                    std::to_string(spec.num_items));
  }
  if (spec.ratings_per_item.lo < 2) {
    throw SpecError("ratings_per_item must be at least 2 everywhere, got lo=" +
                    std::to_string(spec.ratings_per_item.lo));
  }
  if (spec.ratings_per_item.hi < spec.ratings_per_item.lo) {
    throw SpecError("ratings_per_item range is inverted");
  }
  if (spec.latent_mean_dist.hi < spec.latent_mean_dist.lo) {
    throw SpecError("latent_mean range is inverted");
  }
  if (spec.noise_sigma_dist.lo < 0.0) {
    throw SpecError("noise_sigma must be non-negative, got lo=" +
                    format_double(spec.noise_sigma_dist.lo));
  }
  if (spec.noise_sigma_dist.hi < spec.noise_sigma_dist.lo) {
    throw SpecError("noise_sigma range is inverted");
  }
  if (spec.num_raters > 0 &&
      spec.num_raters < static_cast<std::size_t>(spec.ratings_per_item.hi)) {
    throw SpecError("num_raters must cover ratings_per_item.hi");
  }
}

SynthSpec parse_synth_spec(std::string_view json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("invalid spec JSON: ") + e.what());
  }
  SynthSpec spec;
  try {
    spec.num_items = j.at("num_items").get<std::size_t>();
    spec.ratings_per_item =
        int_range_from_json(j.at("ratings_per_item"), "ratings_per_item");
    spec.latent_mean_dist =
        real_range_from_json(j.at("latent_mean"), "latent_mean");
    spec.noise_sigma_dist =
        real_range_from_json(j.at("noise_sigma"), "noise_sigma");
    if (j.contains("noise_family")) {
      const std::string family = j.at("noise_family").get<std::string>();
      if (family == "gaussian") {
        spec.noise_family = NoiseFamily::Gaussian;
      } else if (family == "uniform") {
        spec.noise_family = NoiseFamily::UniformSymmetric;
      } else {
        throw SpecError("unknown noise_family '" + family + "'");
      }
    }
    spec.seed = j.value("seed", std::uint64_t{0});
    spec.num_raters = j.value("num_raters", std::size_t{0});
    if (j.contains("mode")) {
      const std::string mode = j.at("mode").get<std::string>();
      if (mode == "exact") {
        spec.mode = SynthMode::Exact;
      } else if (mode == "realistic_mos") {
        spec.mode = SynthMode::RealisticMos;
      } else {
        throw SpecError("unknown mode '" + mode + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw SpecError(std::string("invalid spec: ") + e.what());
  }
  validate(spec);
  return spec;
}

SynthSpec load_synth_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open spec file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_synth_spec(text.str());
}

std::pair<RatingsTable, GroundTruth> generate(const SynthSpec& spec) {
  validate(spec);

  RatingsTable table;
  table.items.reserve(spec.num_items);
  if (spec.mode == SynthMode::RealisticMos) table.scale_hint = {{1.0, 5.0}};

  GroundTruth truth;
  truth.mu.reserve(spec.num_items);
  truth.sigma.reserve(spec.num_items);
  truth.m.reserve(spec.num_items);

  const std::uint64_t base = rng::derive(spec.seed, "synth");
  std::vector<std::size_t> pool(spec.num_raters);
  char id_buf[48];

  for (std::size_t i = 0; i < spec.num_items; ++i) {
    rng::Stream stream(rng::derive(base, i));
    const int m =
        spec.ratings_per_item.lo == spec.ratings_per_item.hi
            ? spec.ratings_per_item.lo
            : stream.next_int_inclusive(spec.ratings_per_item.lo,
                                        spec.ratings_per_item.hi);
    const double mu =
        spec.latent_mean_dist.lo == spec.latent_mean_dist.hi
            ? spec.latent_mean_dist.lo
            : stream.next_uniform(spec.latent_mean_dist.lo,
                                  spec.latent_mean_dist.hi);
    const double sigma =
        spec.noise_sigma_dist.lo == spec.noise_sigma_dist.hi
            ? spec.noise_sigma_dist.lo
            : stream.next_uniform(spec.noise_sigma_dist.lo,
                                  spec.noise_sigma_dist.hi);

    Item item;
    std::snprintf(id_buf, sizeof(id_buf), "i%06zu", i);
    item.item_id = id_buf;
    item.ratings.reserve(static_cast<std::size_t>(m));

    if (spec.num_raters > 0) {
      // Draw m distinct raters from the shared pool (partial Fisher-Yates).
      for (std::size_t p = 0; p < pool.size(); ++p) pool[p] = p;
      for (int j = 0; j < m; ++j) {
        const std::size_t pick =
            static_cast<std::size_t>(j) +
            stream.next_below(pool.size() - static_cast<std::size_t>(j));
        std::swap(pool[static_cast<std::size_t>(j)], pool[pick]);
      }
    }

    for (int j = 0; j < m; ++j) {
      const double unit_noise = spec.noise_family == NoiseFamily::Gaussian
                                    ? stream.next_gaussian()
                                    : kSqrt3 * (2.0 * stream.next_unit() - 1.0);
      double value = mu + sigma * unit_noise;
      if (spec.mode == SynthMode::RealisticMos) {
        value = std::round(std::min(5.0, std::max(1.0, value)));
      }
      if (spec.num_raters > 0) {
        std::snprintf(id_buf, sizeof(id_buf), "r%06zu",
                      pool[static_cast<std::size_t>(j)]);
      } else {
        std::snprintf(id_buf, sizeof(id_buf), "i%06zu_r%03d", i, j);
      }
      item.ratings.push_back({id_buf, value});
    }

    table.items.push_back(std::move(item));
    truth.mu.push_back(mu);
    truth.sigma.push_back(sigma);
    truth.m.push_back(m);
  }
  return {std::move(table), std::move(truth)};
}

void write_ground_truth_csv(const GroundTruth& truth,
                            const RatingsTable& table,
                            const std::string& path) {
  if (truth.mu.size() != table.num_items()) {
    throw ShapeError("ground truth and table sizes differ");
  }
  std::ofstream out(path);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "item,mu,sigma,m\n";
  for (std::size_t i = 0; i < truth.mu.size(); ++i) {
    out << table.items[i].item_id << ',' << format_double(truth.mu[i]) << ','
        << format_double(truth.sigma[i]) << ',' << truth.m[i] << '\n';
  }
  if (!out) throw IoError("error while writing '" + path + "'");
}

double true_rho(const GroundTruth& truth) {
  if (truth.mu.size() != truth.sigma.size() ||
      truth.mu.size() != truth.m.size()) {
    throw ShapeError("ground truth arrays have mismatched lengths");
  }
  if (truth.mu.size() < 2) {
    throw TooFewItems("closed-form ceiling needs at least 2 items");
  }
  const double var_mu = sample_variance(truth.mu);
  CompensatedSum noise;
  for (std::size_t i = 0; i < truth.mu.size(); ++i) {
    if (truth.m[i] < 1) throw SpecError("ground truth rating count below 1");
    noise.add(truth.sigma[i] * truth.sigma[i] /
              static_cast<double>(truth.m[i]));
  }
  const double mean_noise =
      noise.value() / static_cast<double>(truth.mu.size());
  const double denom = var_mu + mean_noise;
  if (denom <= 0.0) {
    throw DegenerateVariance("both latent variance and noise are zero");
  }
  return std::sqrt(var_mu / denom);
}

OracleResult oracle_check(const SynthSpec& spec, std::size_t trials,
                          const OracleOptions& options) {
  if (trials < 1) throw SpecError("oracle check needs at least 1 trial");
  validate(spec);

  OracleResult result;
  result.trials = trials;
  result.per_trial.resize(trials);

  detail::parallel_for(trials, options.threads, [&](std::size_t t) {
    SynthSpec trial_spec = spec;
    trial_spec.seed = rng::derive(spec.seed, t);  // per-trial counter scheme
    const auto [table, truth] = generate(trial_spec);
    auto& row = result.per_trial[t];
    row.trial = t;
    row.estimated = rho_perfect(table).rho;
    row.truth = true_rho(truth);
  });

  CompensatedSum est_sum;
  CompensatedSum truth_sum;
  for (const auto& row : result.per_trial) {
    est_sum.add(row.estimated);
    truth_sum.add(row.truth);
  }
  result.estimated_rho_mean = est_sum.value() / static_cast<double>(trials);
  result.true_rho = truth_sum.value() / static_cast<double>(trials);
  result.abs_gap = std::abs(result.estimated_rho_mean - result.true_rho);
  return result;
}

}  // namespace rhoperfect
