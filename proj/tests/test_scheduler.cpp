#include <algorithm>
#include <cstdint>
#include <set>
#include <vector>

#include "doctest.h"
#include "errors.h"
#include "matrix.h"
#include "rng.h"
#include "scheduler.h"

using namespace pobp;

TEST_SUITE("scheduler") {

TEST_CASE("selection counts round half up with a floor of one") {
  CHECK(selection_count(0.5, 6) == 3);
  CHECK(selection_count(0.25, 6) == 2);   // 1.5 rounds up
  CHECK(selection_count(0.5, 5) == 3);    // 2.5 rounds up
  CHECK(selection_count(0.1, 6) == 1);
  CHECK(selection_count(0.05, 6) == 1);   // floor of one
  CHECK(selection_count(0.001, 6) == 1);
  CHECK(selection_count(1.0, 4) == 4);
  CHECK(selection_count(0.9, 10) == 9);
  CHECK(selection_count(1.0, 1) == 1);
}

TEST_CASE("word totals sum each word's residual row") {
  Matrix r(3, 4);
  double vals[3][4] = {{0.5, 0.0, 1.5, 2.0}, {0.0, 0.0, 0.0, 0.0},
                       {3.0, 0.25, 0.25, 0.5}};
  for (size_t w = 0; w < 3; ++w)
    for (size_t k = 0; k < 4; ++k) r(w, k) = vals[w][k];
  auto totals = word_residual_totals(r);
  REQUIRE(totals.size() == 3);
  CHECK(totals[0] == doctest::Approx(4.0));
  CHECK(totals[1] == 0.0);
  CHECK(totals[2] == doctest::Approx(4.0));

  Matrix zero(2, 2);
  auto zt = word_residual_totals(zero);
  CHECK(zt == std::vector<double>{0.0, 0.0});
}

TEST_CASE("power words are the highest-residual half of the vocabulary") {
  std::vector<double> totals = {9.0, 1.0, 8.0, 2.0, 7.0, 3.0};
  auto words = select_power_words(totals, 0.5);
  CHECK(words == std::vector<uint32_t>{0, 2, 4});

  auto all = select_power_words(totals, 1.0);
  CHECK(all == std::vector<uint32_t>{0, 1, 2, 3, 4, 5});

  std::vector<double> equal(4, 1.0);
  auto tied = select_power_words(equal, 0.5);
  CHECK(tied == std::vector<uint32_t>{0, 1});

  CHECK_THROWS_AS(select_power_words({}, 0.5), ConfigError);
}

TEST_CASE("power topics rank within each selected word's row") {
  Matrix r(2, 4);
  double row0[] = {0.1, 0.9, 0.4, 0.4};
  double row1[] = {1.0, 0.0, 0.0, 2.0};
  for (size_t k = 0; k < 4; ++k) {
    r(0, k) = row0[k];
    r(1, k) = row1[k];
  }
  std::vector<uint32_t> words = {0, 1};
  auto topics = select_power_topics(r, words, 0.5);
  REQUIRE(topics.size() == 2);
  CHECK(topics[0] == std::vector<uint32_t>{1, 2});  // 0.4 tie -> lower index
  CHECK(topics[1] == std::vector<uint32_t>{0, 3});

  auto everything = select_power_topics(r, words, 1.0);
  CHECK(everything[0] == std::vector<uint32_t>{0, 1, 2, 3});
}

TEST_CASE("ratio validation rejects values outside (0, 1]") {
  CHECK_NOTHROW((SelectionRatios{0.1, 1.0}).validate());
  CHECK_THROWS_AS((SelectionRatios{0.0, 0.5}).validate(), ConfigError);
  CHECK_THROWS_AS((SelectionRatios{1.2, 0.5}).validate(), ConfigError);
  CHECK_THROWS_AS((SelectionRatios{0.5, -0.1}).validate(), ConfigError);
  CHECK_THROWS_AS(select_power_set(Matrix(2, 2), {2.0, 0.5}, 1), ConfigError);
}

TEST_CASE("selected sets dominate the unselected remainder") {
  const size_t W = 40, K = 12;
  Matrix r(W, K);
  KeyedRng rng(2024, 0x5eeded, 0, 0);
  for (size_t w = 0; w < W; ++w)
    for (size_t k = 0; k < K; ++k) r(w, k) = rng.uniform01() * 10.0;

  SelectionRatios ratios{0.2, 0.25};
  PowerSet ps = select_power_set(r, ratios, 3);
  CHECK(ps.iteration == 3);
  CHECK(ps.words.size() == selection_count(0.2, W));
  CHECK(std::is_sorted(ps.words.begin(), ps.words.end()));
  CHECK(ps.cell_count() == ps.words.size() * selection_count(0.25, K));

  auto totals = word_residual_totals(r);
  std::set<uint32_t> chosen(ps.words.begin(), ps.words.end());
  double worst_in = 1e300;
  for (uint32_t w : ps.words) worst_in = std::min(worst_in, totals[w]);
  for (uint32_t w = 0; w < W; ++w)
    if (!chosen.count(w)) CHECK(totals[w] <= worst_in);

  for (size_t i = 0; i < ps.words.size(); ++i) {
    const auto& sel = ps.topics[i];
    CHECK(sel.size() == selection_count(0.25, K));
    CHECK(std::is_sorted(sel.begin(), sel.end()));
    std::set<uint32_t> in(sel.begin(), sel.end());
    double floor_in = 1e300;
    for (uint32_t k : sel) floor_in = std::min(floor_in, r(ps.words[i], k));
    for (uint32_t k = 0; k < K; ++k)
      if (!in.count(k)) CHECK(r(ps.words[i], k) <= floor_in);
  }
}

TEST_CASE("a word whose residual spikes is selected on the next pass") {
  Matrix r(6, 2);
  for (size_t w = 0; w < 6; ++w) r(w, 0) = 1.0 + double(w);
  SelectionRatios ratios{0.5, 1.0};
  PowerSet before = select_power_set(r, ratios, 2);
  CHECK(std::find(before.words.begin(), before.words.end(), 0u) ==
        before.words.end());
  r(0, 1) = 100.0;
  PowerSet after = select_power_set(r, ratios, 3);
  CHECK(std::find(after.words.begin(), after.words.end(), 0u) !=
        after.words.end());
}

TEST_CASE("selection is deterministic for identical inputs") {
  Matrix r(10, 4);
  KeyedRng rng(7, 0xabc, 1, 2);
  for (size_t w = 0; w < 10; ++w)
    for (size_t k = 0; k < 4; ++k) r(w, k) = rng.uniform01();
  SelectionRatios ratios{0.3, 0.5};
  PowerSet a = select_power_set(r, ratios, 5);
  PowerSet b = select_power_set(r, ratios, 5);
  CHECK(a.words == b.words);
  CHECK(a.topics == b.topics);
}

TEST_CASE("top-share brackets follow the sorted residual mass") {
  std::vector<double> totals = {8.0, 1.0, 1.0};
  std::vector<double> third = {1.0 / 3.0};
  auto shares = powerlaw_topshare(totals, third);
  REQUIRE(shares.size() == 1);
  CHECK(shares[0].words == 1);
  CHECK(shares[0].share == doctest::Approx(0.8));

  std::vector<double> full = {1.0};
  auto everything = powerlaw_topshare(totals, full);
  CHECK(everything[0].words == 3);
  CHECK(everything[0].share == doctest::Approx(1.0));

  std::vector<double> ladder = {0.1, 0.4, 0.7, 1.0};
  auto steps = powerlaw_topshare(totals, ladder);
  for (size_t i = 1; i < steps.size(); ++i)
    CHECK(steps[i].share >= steps[i - 1].share);

  std::vector<double> zeros(4, 0.0);
  CHECK_THROWS_AS(powerlaw_topshare(zeros, full), NumericError);
  std::vector<double> bad = {0.0};
  CHECK_THROWS_AS(powerlaw_topshare(totals, bad), ConfigError);
  std::vector<double> big = {1.5};
  CHECK_THROWS_AS(powerlaw_topshare(totals, big), ConfigError);
}

TEST_CASE("the rank curve lists words by descending residual") {
  std::vector<double> totals = {3.0, 5.0, 5.0, 1.0};
  auto curve = residual_rank_curve(totals);
  REQUIRE(curve.size() == 4);
  CHECK(curve[0].rank == 1);
  CHECK(curve[0].word == 1);  // tie between words 1 and 2 -> lower id first
  CHECK(curve[1].word == 2);
  CHECK(curve[2].word == 0);
  CHECK(curve[3].word == 3);
  for (size_t i = 1; i < curve.size(); ++i) {
    CHECK(curve[i].rank == i + 1);
    CHECK(curve[i].residual <= curve[i - 1].residual);
  }
}

}  // TEST_SUITE
