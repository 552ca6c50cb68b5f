#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "rhoperfect/core.hpp"
#include "rhoperfect/errors.hpp"
#include "rhoperfect/split.hpp"
#include "rhoperfect/stats.hpp"
#include "rhoperfect/synth.hpp"

using namespace rhoperfect;
using rhoperfect::testing::make_item;
using rhoperfect::testing::make_table;

namespace {

std::set<std::string> distinct_raters(const RatingsTable& table) {
  std::set<std::string> raters;
  for (const auto& item : table.items) {
    for (const auto& r : item.ratings) raters.insert(r.rater_id);
  }
  return raters;
}

// Multiset of (item, rater, value) triples.
std::multiset<std::string> rating_triples(const RatingsTable& table) {
  std::multiset<std::string> triples;
  for (const auto& item : table.items) {
    for (const auto& r : item.ratings) {
      triples.insert(item.item_id + "|" + r.rater_id + "|" +
                     std::to_string(r.value));
    }
  }
  return triples;
}

}  // namespace

TEST_CASE("split_raters partitions the rater pool in halves") {
  // 8 positional raters shared by both items.
  const RatingsTable even = make_table(
      {{1, 2, 3, 4, 5, 6, 7, 8}, {2, 3, 4, 5, 6, 7, 8, 9}});
  const SplitPair pair = split_raters(even, 7);
  CHECK(distinct_raters(pair.first).size() == 4);
  CHECK(distinct_raters(pair.second).size() == 4);

  const RatingsTable odd =
      make_table({{1, 2, 3, 4, 5, 6, 7}, {2, 3, 4, 5, 6, 7, 8}});
  const SplitPair odd_pair = split_raters(odd, 7);
  // The extra rater lands on the first side.
  CHECK(distinct_raters(odd_pair.first).size() == 4);
  CHECK(distinct_raters(odd_pair.second).size() == 3);
}

TEST_CASE("split_raters is deterministic in the seed") {
  SynthSpec spec = testing::default_spec(5);
  spec.num_items = 80;
  auto [table, truth] = generate(spec);
  const SplitPair a = split_raters(table, 123);
  const SplitPair b = split_raters(table, 123);
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
  CHECK(a.common_items == b.common_items);
  const SplitPair c = split_raters(table, 124);
  CHECK(a.first != c.first);
}

TEST_CASE("split_raters needs two raters") {
  RatingsTable table;
  table.items.push_back({"a", {{"solo", 1.0}, {"solo", 2.0}}, {}});
  CHECK_THROWS_AS(split_raters(table, 1), CannotSplit);
}

TEST_CASE("split_ratings halves every item") {
  RatingsTable table;
  Item eight = make_item("eight", {1, 2, 3, 4, 5, 6, 7, 8});
  Item seventeen;
  seventeen.item_id = "seventeen";
  for (int j = 0; j < 17; ++j) {
    seventeen.ratings.push_back({"s" + std::to_string(j), 1.0 + j});
  }
  table.items = {eight, seventeen};

  const SplitPair pair = split_ratings(table, 3);
  REQUIRE(pair.first.items.size() == 2);
  REQUIRE(pair.second.items.size() == 2);
  CHECK(pair.first.items[0].ratings.size() == 4);
  CHECK(pair.second.items[0].ratings.size() == 4);
  // 17 ratings split 9 / 8, extra on the first side.
  CHECK(pair.first.items[1].ratings.size() == 9);
  CHECK(pair.second.items[1].ratings.size() == 8);
  // Both sides contain every item.
  CHECK(pair.common_items == std::vector<std::string>{"eight", "seventeen"});
}

TEST_CASE("split_ratings rejects single-rating items by name") {
  RatingsTable table = make_table({{1, 2}, {3, 4}});
  table.items.push_back(make_item("lonely", {9}));
  try {
    split_ratings(table, 1);
    FAIL("expected CannotSplit");
  } catch (const CannotSplit& e) {
    CHECK(std::string(e.what()).find("lonely") != std::string::npos);
  }
}

TEST_CASE("both split methods preserve the rating multiset") {
  for (int trial = 0; trial < 8; ++trial) {
    SynthSpec spec = testing::default_spec(100 + trial);
    spec.num_items = 50;
    spec.ratings_per_item = {2, 9};
    if (trial % 2 == 0) spec.num_raters = 30;
    auto [table, truth] = generate(spec);
    const auto original = rating_triples(table);
    for (const SplitMethod method :
         {SplitMethod::SplitRaters, SplitMethod::SplitRatings}) {
      const SplitPair pair = split_table(table, method, 55 + trial);
      auto combined = rating_triples(pair.first);
      const auto second = rating_triples(pair.second);
      combined.insert(second.begin(), second.end());
      CHECK(combined == original);
    }

    // No rater may straddle the two sides of a rater split.
    const SplitPair pair = split_raters(table, 99 + trial);
    const auto left = distinct_raters(pair.first);
    const auto right = distinct_raters(pair.second);
    bool disjoint = true;
    for (const auto& rater : left) disjoint = disjoint && !right.count(rater);
    CHECK(disjoint);
  }
}

TEST_CASE("test_retest_corr of identical sides is 1") {
  const RatingsTable table = make_table({{1, 2}, {4, 5}, {7, 9}});
  SplitPair pair;
  pair.first = table;
  pair.second = table;
  for (const auto& item : table.items) pair.common_items.push_back(item.item_id);
  CHECK(test_retest_corr(pair) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("test_retest_corr of anti-symmetric sides is -1") {
  SplitPair pair;
  pair.first = make_table({{1}, {2}, {3}});
  pair.second = make_table({{3}, {2}, {1}});
  for (const auto& item : pair.first.items) {
    pair.common_items.push_back(item.item_id);
  }
  CHECK(test_retest_corr(pair) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("test_retest_corr is symmetric in the sides") {
  SynthSpec spec = testing::default_spec(17);
  spec.num_items = 60;
  auto [table, truth] = generate(spec);
  SplitPair pair = split_ratings(table, 5);
  const double forward = test_retest_corr(pair);
  std::swap(pair.first, pair.second);
  CHECK(test_retest_corr(pair) == doctest::Approx(forward).epsilon(1e-12));
}

TEST_CASE("test_retest_corr degenerate cases") {
  SplitPair constant;
  constant.first = make_table({{1}, {1}, {1}});
  constant.second = make_table({{2}, {3}, {4}});
  for (const auto& item : constant.first.items) {
    constant.common_items.push_back(item.item_id);
  }
  CHECK_THROWS_AS(test_retest_corr(constant), DegenerateVariance);

  SplitPair too_few;
  too_few.first = make_table({{1}});
  too_few.second = make_table({{2}});
  too_few.common_items = {"item0"};
  CHECK_THROWS_AS(test_retest_corr(too_few), TooFewItems);
}

TEST_CASE("conditional covariance: independent noise leaves no excess") {
  SynthSpec spec = testing::default_spec(42);
  spec.num_items = 800;
  auto [table, truth] = generate(spec);
  for (const SplitMethod method :
       {SplitMethod::SplitRaters, SplitMethod::SplitRatings}) {
    const CondCovEstimate c = conditional_cov_detail(table, method, 24, 9);
    // The plain estimate sits at its mechanical offset...
    CHECK(c.mean_cov < 0.0);
    CHECK(std::abs(c.mean_cov - c.mechanical_offset) <=
          std::max(5.0 * c.excess_se, 1e-9));
    // ...and the offset-corrected excess is statistically zero.
    CHECK(std::abs(c.excess_mean) <= std::max(5.0 * c.excess_se, 1e-9));
    CHECK(c.num_resplits == 24);
    CHECK(c.items_used > 0);
  }
}

TEST_CASE("conditional covariance offset equals minus the mean conditional variance") {
  SynthSpec spec = testing::default_spec(8);
  spec.num_items = 120;
  auto [table, truth] = generate(spec);
  // With split_ratings every item is used, so the documented identity holds
  // exactly: mechanical_offset == -E[Var(Y|X)] over the table.
  const CondCovEstimate c =
      conditional_cov_detail(table, SplitMethod::SplitRatings, 16, 4);
  CHECK(c.items_used == table.num_items());
  CHECK(c.mechanical_offset ==
        doctest::Approx(-expected_conditional_variance(table)).epsilon(1e-9));
}

TEST_CASE("conditional covariance: identical forced halves reduce to Cov(Z,Z)") {
  // Items whose two ratings agree force both halves to the same value, so
  // the covariance equals the (zero) across-resplit variance of y1.
  const RatingsTable table = make_table({{3, 3}, {4, 4}, {5, 5}});
  const CondCovEstimate c =
      conditional_cov_detail(table, SplitMethod::SplitRatings, 8, 1);
  CHECK(c.mean_cov == 0.0);
  CHECK(c.excess_mean == 0.0);
}

TEST_CASE("conditional covariance needs 2 resplits") {
  const RatingsTable table = make_table({{1, 2}, {3, 4}});
  CHECK_THROWS_AS(conditional_cov_term(table, SplitMethod::SplitRatings, 1, 1),
                  SpecError);
}

TEST_CASE("run_validation on zero-noise data reports exact agreement") {
  SynthSpec spec = testing::default_spec(5);
  spec.num_items = 120;
  spec.ratings_per_item = {4, 8};
  spec.noise_sigma_dist = {0.0, 0.0};
  auto [table, truth] = generate(spec);

  const std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  for (const SplitMethod method :
       {SplitMethod::SplitRaters, SplitMethod::SplitRatings}) {
    const ValidationReport report = run_validation(table, method, seeds);
    CHECK(report.rho_sq_mean == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(report.retest_corr_mean == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(report.num_seeds == 5);
    CHECK(report.failed_seeds.empty());
  }
}

TEST_CASE("run_validation aggregates match the per-seed rows") {
  SynthSpec spec = testing::default_spec(21);
  spec.num_items = 300;
  auto [table, truth] = generate(spec);
  const std::vector<std::uint64_t> seeds{3, 1, 2, 9, 8};
  const ValidationReport report =
      run_validation(table, SplitMethod::SplitRatings, seeds);

  REQUIRE(report.per_seed.size() == 5);
  CHECK(std::is_sorted(report.per_seed.begin(), report.per_seed.end(),
                       [](const SeedOutcome& a, const SeedOutcome& b) {
                         return a.seed < b.seed;
                       }));
  std::vector<double> rho_sq;
  std::vector<double> retest;
  for (const auto& row : report.per_seed) {
    CHECK(row.rho_sq >= 0.0);
    CHECK(row.rho_sq <= 1.0);
    rho_sq.push_back(row.rho_sq);
    retest.push_back(row.retest_corr);
  }
  CHECK(report.rho_sq_mean == doctest::Approx(mean(rho_sq)).epsilon(1e-12));
  CHECK(report.rho_sq_std ==
        doctest::Approx(mean_std(rho_sq).std).epsilon(1e-12));
  CHECK(report.retest_corr_mean ==
        doctest::Approx(mean(retest)).epsilon(1e-12));
}

TEST_CASE("run_validation single seed reports zero spread") {
  SynthSpec spec = testing::default_spec(13);
  spec.num_items = 100;
  auto [table, truth] = generate(spec);
  const std::vector<std::uint64_t> seeds{4};
  const ValidationReport report =
      run_validation(table, SplitMethod::SplitRatings, seeds);
  CHECK(report.num_seeds == 1);
  CHECK(report.rho_sq_std == 0.0);
  CHECK(report.retest_corr_std == 0.0);
}

TEST_CASE("run_validation agreement between rho^2 and retest correlation") {
  // The central empirical claim: mean rho^2 of the first split tracks the
  // mean test-retest correlation.
  SynthSpec spec = testing::default_spec(42);
  auto [table, truth] = generate(spec);
  std::vector<std::uint64_t> seeds;
  for (int i = 1; i <= 10; ++i) seeds.push_back(i);

  ValidationOptions options;
  options.threads = 0;
  for (const SplitMethod method :
       {SplitMethod::SplitRaters, SplitMethod::SplitRatings}) {
    const ValidationReport report =
        run_validation(table, method, seeds, options);
    CHECK(std::abs(report.rho_sq_mean - report.retest_corr_mean) <= 0.03);
  }
}

TEST_CASE("run_validation is independent of the thread count") {
  SynthSpec spec = testing::default_spec(2);
  spec.num_items = 200;
  auto [table, truth] = generate(spec);
  std::vector<std::uint64_t> seeds{5, 6, 7, 8, 9, 10};

  ValidationOptions serial;
  serial.threads = 1;
  ValidationOptions parallel;
  parallel.threads = 4;
  const ValidationReport a =
      run_validation(table, SplitMethod::SplitRaters, seeds, serial);
  const ValidationReport b =
      run_validation(table, SplitMethod::SplitRaters, seeds, parallel);
  CHECK(a.per_seed.size() == b.per_seed.size());
  for (std::size_t i = 0; i < a.per_seed.size(); ++i) {
    CHECK(a.per_seed[i].seed == b.per_seed[i].seed);
    CHECK(a.per_seed[i].rho_sq == b.per_seed[i].rho_sq);
    CHECK(a.per_seed[i].retest_corr == b.per_seed[i].retest_corr);
  }
  CHECK(a.rho_sq_mean == b.rho_sq_mean);
  CHECK(a.retest_corr_mean == b.retest_corr_mean);
  CHECK(a.cond_cov_mean == b.cond_cov_mean);
}

TEST_CASE("run_validation records degenerate seeds instead of failing") {
  // Three raters; r2 rates every item identically. Whenever the singleton
  // side is {r2}, that side's means are constant and the seed degenerates.
  RatingsTable table;
  for (int i = 0; i < 4; ++i) {
    Item item;
    item.item_id = "m" + std::to_string(i);
    item.ratings.push_back({"r0", 1.0 + i});
    item.ratings.push_back({"r1", 2.0 + 1.5 * i});
    item.ratings.push_back({"r2", 3.0});
    table.items.push_back(item);
  }
  std::vector<std::uint64_t> seeds;
  for (int i = 1; i <= 12; ++i) seeds.push_back(i);
  const ValidationReport report =
      run_validation(table, SplitMethod::SplitRaters, seeds);
  CHECK(report.num_seeds + report.failed_seeds.size() == 12);
  CHECK(report.num_seeds > 0);
  CHECK(!report.failed_seeds.empty());
}

TEST_CASE("run_validation rethrows when every seed degenerates") {
  // Two raters: each side of any split holds single-rating items only, so
  // the first-side ceiling estimate can never be formed.
  RatingsTable table;
  for (int i = 0; i < 3; ++i) {
    Item item;
    item.item_id = "m" + std::to_string(i);
    item.ratings.push_back({"r0", 1.0 + i});
    item.ratings.push_back({"r1", 7.0});
    table.items.push_back(item);
  }
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  CHECK_THROWS_AS(run_validation(table, SplitMethod::SplitRaters, seeds),
                  TooFewItems);
}
