#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "sprinter/screen.hpp"
#include "support/oracles.hpp"

using namespace sprinter;
using namespace sprinter::screen;
using sprinter::testing::brute_force_scores;
using sprinter::testing::brute_force_threshold;
using sprinter::testing::brute_force_topm;
using sprinter::testing::random_gaussian;
using sprinter::testing::random_vector;

namespace {

void expect_matches(const ScreenResult& got, const std::vector<sprinter::testing::BruteScore>& want, double tol) {
  ASSERT_EQ(got.selected.size(), want.size());
  for (std::size_t i = 0; i < want.size(); ++i) {
    EXPECT_EQ(got.selected[i].ell, want[i].ell) << "rank " << i;
    EXPECT_EQ(got.selected[i].pair, Term::pair(want[i].j, want[i].k));
    EXPECT_NEAR(got.selected[i].score, want[i].score, tol) << "rank " << i;
  }
}

// Keeps the reference ordering robust: scores closer than the kernel
// rounding could legitimately swap.
bool well_separated(const std::vector<sprinter::testing::BruteScore>& all, std::size_t m) {
  auto sorted = all;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.score > b.score; });
  for (std::size_t i = 0; i + 1 < std::min(sorted.size(), m + 1); ++i) {
    if (sorted[i].score - sorted[i + 1].score < 1e-9) return false;
  }
  return true;
}

}  // namespace

TEST(Screen, TopMMatchesBruteForce) {
  std::mt19937_64 rng(1);
  int compared = 0;
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 10 + rep * 3;
    const std::size_t p = 3 + rep % 9;
    const Dataset data = random_gaussian(n, p, rng);
    const auto r = random_vector(n, rng);
    const std::size_t m = 1 + rep % 7;
    if (!well_separated(brute_force_scores(data, r, false), m)) continue;
    ++compared;
    const ScreenResult got = screen_topm(data, r, m);
    expect_matches(got, brute_force_topm(data, r, m), 1e-10);
    EXPECT_EQ(got.stats.pairs_scanned, p * (p + 1) / 2);
  }
  EXPECT_GE(compared, 15);
}

TEST(Screen, ThresholdMatchesBruteForce) {
  std::mt19937_64 rng(2);
  for (int rep = 0; rep < 10; ++rep) {
    const Dataset data = random_gaussian(30, 8, rng);
    auto r = random_vector(30, rng);
    for (std::size_t i = 0; i < 30; ++i) r[i] = 2.0 * r[i] + data.at(i, 1) * data.at(i, 4);
    const double eta = 0.1 * rep;
    const auto want = brute_force_threshold(data, r, eta);
    bool near_boundary = false;
    for (const auto& s : brute_force_scores(data, r, true)) near_boundary |= std::abs(s.score - eta) < 1e-9;
    if (near_boundary) continue;
    expect_matches(screen_threshold(data, r, eta), want, 1e-10);
  }
}

TEST(Screen, HandComputedToyExample) {
  // n = 6, p = 3; the residual equals Z_01 exactly.
  const Dataset data(6, 3,
                     {1, -1, 2, 0, 1, -2,    //
                      1, 1, -1, 2, -2, 0.5,  //
                      0, 1, 1, -1, 3, 2});
  std::vector<double> r(6);
  for (std::size_t i = 0; i < 6; ++i) r[i] = data.at(i, 0) * data.at(i, 1);
  const ScreenResult got = screen_topm(data, r, 1);
  ASSERT_EQ(got.selected.size(), 1u);
  EXPECT_EQ(got.selected[0].pair, Term::pair(0, 1));
  EXPECT_EQ(got.selected[0].ell, 1u);
  EXPECT_NEAR(got.selected[0].score, 1.0, 1e-12);

  const auto all = brute_force_scores(data, r, false);
  const ScreenResult full = screen_topm(data, r, 6);
  ASSERT_EQ(full.selected.size(), 6u);
  for (const ScreenScore& s : full.selected) EXPECT_NEAR(s.score, all[s.ell].score, 1e-12);
}

TEST(Screen, TiesBreakTowardSmallerIndex) {
  // Columns 0 and 1 identical: pairs (0,2) and (1,2) tie exactly, as do (0,0), (0,1), (1,1).
  const Dataset data(5, 3, {1, 2, -1, 0.5, 3, 1, 2, -1, 0.5, 3, 2, -1, 1, 1, 0});
  const std::vector<double> r{0.3, -1, 2, 0.1, 0.7};
  const ScreenResult got = screen_topm(data, r, 6);
  const TauMap tau(3);
  for (std::size_t i = 0; i + 1 < got.selected.size(); ++i) {
    EXPECT_TRUE(ranks_before(got.selected[i], got.selected[i + 1]) ||
                std::abs(got.selected[i].score - got.selected[i + 1].score) < 1e-14);
  }
  std::size_t pos02 = 99, pos12 = 99;
  for (std::size_t i = 0; i < got.selected.size(); ++i) {
    if (got.selected[i].ell == tau(0, 2)) pos02 = i;
    if (got.selected[i].ell == tau(1, 2)) pos12 = i;
  }
  EXPECT_LT(pos02, pos12);
}

TEST(Screen, ThresholdIsStrict) {
  const Dataset data(4, 2, {1, -1, 1, -1, 1, 1, -1, -1});
  std::vector<double> r(4);
  for (std::size_t i = 0; i < 4; ++i) r[i] = data.at(i, 0) * data.at(i, 1);
  // sd(r) = 1 and |cor| = 1 for pair (0,1); squares are constant.
  const ScreenResult at = screen_threshold(data, r, 1.0);
  EXPECT_TRUE(at.selected.empty());
  const ScreenResult below = screen_threshold(data, r, 1.0 - 1e-9);
  ASSERT_EQ(below.selected.size(), 1u);
  EXPECT_EQ(below.selected[0].pair, Term::pair(0, 1));
  EXPECT_EQ(below.stats.zero_variance, 2u);
}

TEST(Screen, InvalidArguments) {
  std::mt19937_64 rng(3);
  const Dataset data = random_gaussian(10, 3, rng);
  const auto r = random_vector(10, rng);
  EXPECT_THROW(screen_topm(data, r, 0), ConfigError);
  EXPECT_THROW(screen_threshold(data, r, -0.1), ConfigError);
  EXPECT_THROW(screen_threshold(data, r, std::nan("")), ConfigError);
  const std::vector<double> short_r(9, 1.0);
  EXPECT_THROW(screen_topm(data, short_r, 2), InputError);
}

TEST(Screen, DegenerateResidualIsRejected) {
  std::mt19937_64 rng(4);
  const Dataset data = random_gaussian(10, 3, rng);
  const std::vector<double> flat(10, 2.5);
  EXPECT_THROW(screen_topm(data, flat, 2), DegenerateResidualError);
  EXPECT_THROW(screen_threshold(data, flat, 0.0), DegenerateResidualError);
}

TEST(Screen, ResidualCorrelationExamples) {
  const std::vector<double> a{1, 2, 3, 4};
  const std::vector<double> b{2, 4, 6, 8};
  const std::vector<double> c{4, 3, 2, 1};
  const std::vector<double> flat{1, 1, 1, 1};
  EXPECT_NEAR(residual_correlation(a, b), 1.0, 1e-15);
  EXPECT_NEAR(residual_correlation(a, c), -1.0, 1e-15);
  EXPECT_EQ(residual_correlation(a, flat), 0.0);
  EXPECT_EQ(residual_correlation(flat, a), 0.0);
  const std::vector<double> d{1, -1, -1, 1};
  EXPECT_NEAR(residual_correlation(a, d), 0.0, 1e-15);
}

TEST(Screen, InvariantToResidualAffineMaps) {
  std::mt19937_64 rng(5);
  const Dataset data = random_gaussian(40, 7, rng);
  const auto r = random_vector(40, rng);
  std::vector<double> r2(r);
  for (double& v : r2) v = 1e3 * v - 17.0;
  const ScreenResult a = screen_topm(data, r, 10);
  const ScreenResult b = screen_topm(data, r2, 10);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(a.selected[i].ell, b.selected[i].ell);
    EXPECT_NEAR(a.selected[i].score, b.selected[i].score, 1e-10);
  }
  // Threshold scores carry sd(r).
  const ScreenResult t1 = screen_threshold(data, r, 0.0);
  const ScreenResult t2 = screen_threshold(data, r2, 0.0);
  ASSERT_EQ(t1.selected.size(), t2.selected.size());
  EXPECT_NEAR(t2.selected[0].score / t1.selected[0].score, 1e3, 1e-7);
}

TEST(Screen, ResultIndependentOfWorkerCount) {
  std::mt19937_64 rng(6);
  const Dataset data = random_gaussian(50, 60, rng);
  const auto r = random_vector(50, rng);
  const ScreenResult one = screen_topm(data, r, 25, {1});
  for (std::size_t w : {2u, 3u, 8u}) {
    const ScreenResult many = screen_topm(data, r, 25, {w});
    ASSERT_EQ(many.selected.size(), one.selected.size());
    for (std::size_t i = 0; i < one.selected.size(); ++i) {
      EXPECT_EQ(many.selected[i].ell, one.selected[i].ell);
      EXPECT_EQ(many.selected[i].score, one.selected[i].score);
    }
    EXPECT_EQ(many.stats.pairs_scanned, one.stats.pairs_scanned);
  }
  const ScreenResult t1 = screen_threshold(data, r, 0.2, {1});
  const ScreenResult t4 = screen_threshold(data, r, 0.2, {4});
  ASSERT_EQ(t1.selected.size(), t4.selected.size());
  for (std::size_t i = 0; i < t1.selected.size(); ++i) EXPECT_EQ(t1.selected[i].ell, t4.selected[i].ell);
}

TEST(Screen, BudgetAboveQReturnsEveryNonConstantPair) {
  std::mt19937_64 rng(7);
  const Dataset data = random_gaussian(15, 5, rng);
  const auto r = random_vector(15, rng);
  const ScreenResult got = screen_topm(data, r, 1000);
  EXPECT_EQ(got.selected.size(), 15u);
  EXPECT_LE(got.stats.peak_tracked, 15u);
}

TEST(Screen, BinaryDataZeroVarianceInteractions) {
  // Column 2 is zero whenever column 0 is one, so Z_02 is identically zero.
  const Dataset data(6, 3, {1, 1, 0, 0, 1, 0,  //
                            0, 1, 1, 0, 1, 1,  //
                            0, 0, 1, 1, 0, 1});
  const std::vector<double> r{1, -2, 0.5, 0.3, 1.1, -0.4};
  const ScreenResult got = screen_topm(data, r, 6);
  const TauMap tau(3);
  for (const ScreenScore& s : got.selected) EXPECT_NE(s.ell, tau(0, 2));
  EXPECT_EQ(got.stats.zero_variance, 1u);
  expect_matches(got, brute_force_topm(data, r, 6), 1e-12);
}

TEST(Screen, RiboflavinScalePassCountsEveryPair) {
  std::mt19937_64 rng(8);
  const Dataset data = random_gaussian(8, 4088, rng);
  const auto r = random_vector(8, rng);
  const ScreenResult got = screen_topm(data, r, 71);
  EXPECT_EQ(got.stats.pairs_scanned, 8357916u);
  EXPECT_EQ(got.selected.size(), 71u);
  EXPECT_LE(got.stats.peak_tracked, 71u);
  for (std::size_t i = 0; i + 1 < got.selected.size(); ++i) {
    EXPECT_TRUE(ranks_before(got.selected[i], got.selected[i + 1]));
  }
}

TEST(Screen, BudgetPresets) {
  EXPECT_EQ(default_m(71), 71u);
  EXPECT_EQ(m_over_log_n(100), 22u);  // 100 / ln 100 = 21.7
  EXPECT_EQ(m_over_log_n(2), 1u);
  EXPECT_EQ(m_over_log_n(3), 3u);
}
