#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "sprinter/lasso.hpp"
#include "support/oracles.hpp"

using namespace sprinter;
using namespace sprinter::lasso;
using sprinter::testing::qp_lasso;
using sprinter::testing::random_vector;
using sprinter::testing::reference_stats;

namespace {

using Columns = std::vector<std::vector<double>>;

Columns random_columns(std::size_t n, std::size_t p, std::mt19937_64& rng) {
  Columns cols;
  for (std::size_t j = 0; j < p; ++j) cols.push_back(random_vector(n, rng));
  return cols;
}

std::vector<double> standardize(const std::vector<double>& x) {
  double m = 0, s = 0;
  reference_stats(x, m, s);
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - m) / s;
  return out;
}

std::vector<double> centered(const std::vector<double>& y) {
  double m = 0, s = 0;
  reference_stats(y, m, s);
  std::vector<double> out(y);
  for (double& v : out) v -= m;
  return out;
}

// KKT residual recomputed from the reported original-scale coefficients.
double independent_kkt(const Columns& cols, const std::vector<double>& y, const LassoFit& fit) {
  const std::size_t n = y.size();
  std::vector<double> res(y);
  for (std::size_t i = 0; i < n; ++i) {
    res[i] -= fit.intercept;
    for (const auto& [c, b] : fit.coefficients) res[i] -= b * cols[c][i];
  }
  double worst = 0;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    double m = 0, s = 0;
    reference_stats(cols[c], m, s);
    if (!(s * s > 1e-12 * (s * s + m * m))) continue;
    double g = 0;
    for (std::size_t i = 0; i < n; ++i) g += (cols[c][i] - m) / s * res[i];
    g /= static_cast<double>(n);
    const double b = fit.coefficient(c);
    const double v = b == 0 ? std::max(0.0, std::abs(g) - fit.lambda) : std::abs(g - std::copysign(fit.lambda, b));
    worst = std::max(worst, v);
  }
  return worst;
}

std::vector<double> signal_response(const Columns& cols, std::mt19937_64& rng, double noise = 1.0) {
  std::vector<double> y = random_vector(cols[0].size(), rng);
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] *= noise;
    y[i] += 2.0 * cols[0][i] - 1.5 * cols[1 % cols.size()][i];
  }
  return y;
}

}  // namespace

TEST(Lasso, NullModelAtLambdaMax) {
  std::mt19937_64 rng(1);
  const Columns cols = random_columns(40, 6, rng);
  const auto y = signal_response(cols, rng);
  LassoConfig full;
  full.max_deviance_ratio = 1.0;
  full.min_deviance_change = 0.0;
  const LassoPath path = fit_path(cols, y, full);
  ASSERT_EQ(path.lambdas.size(), 100u);
  EXPECT_TRUE(path.fits[0].coefficients.empty());
  double ybar = 0, sd = 0;
  reference_stats(y, ybar, sd);
  EXPECT_NEAR(path.fits[0].intercept, ybar, 1e-12);
  for (std::size_t i = 1; i < path.lambdas.size(); ++i) EXPECT_LT(path.lambdas[i], path.lambdas[i - 1]);
  EXPECT_NEAR(path.lambdas.back() / path.lambdas.front(), 1e-4, 1e-12);

  const DenseDesign design = DenseDesign::from_columns(cols);
  const double above[] = {lambda_max(design, y) * 1.0000001};
  EXPECT_TRUE(fit_path(design, y, LassoConfig{}, above).fits[0].coefficients.empty());
}

TEST(Lasso, LambdaMinRatioDependsOnShape) {
  std::mt19937_64 rng(2);
  const Columns cols = random_columns(5, 10, rng);
  const auto y = random_vector(5, rng);
  LassoConfig full;
  full.max_deviance_ratio = 1.0;
  full.min_deviance_change = 0.0;
  const LassoPath path = fit_path(cols, y, full);
  EXPECT_NEAR(path.lambdas.back() / path.lambdas.front(), 1e-2, 1e-12);
}

TEST(Lasso, UnivariateSoftThresholdClosedForm) {
  std::mt19937_64 rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    const Columns cols = random_columns(30, 1, rng);
    auto y = random_vector(30, rng);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += 0.8 * cols[0][i];
    const auto xs = standardize(cols[0]);
    const auto yc = centered(y);
    double z = 0;
    for (std::size_t i = 0; i < y.size(); ++i) z += xs[i] * yc[i];
    z /= 30.0;
    for (double frac : {0.1, 0.5, 0.9}) {
      const double lam[] = {frac * std::abs(z)};
      const DenseDesign design = DenseDesign::from_columns(cols);
      const LassoFit fit = fit_path(design, y, LassoConfig{}, lam).fits[0];
      double m = 0, s = 0;
      reference_stats(cols[0], m, s);
      EXPECT_NEAR(fit.coefficient(0) * s, soft_threshold(z, lam[0]), 1e-10);
    }
  }
}

TEST(Lasso, MatchesQuadraticProgrammingOracle) {
  std::mt19937_64 rng(4);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t k = 1 + rep % 3;
    Columns cols = random_columns(25, k, rng);
    if (rep % 2 == 0) {
      // correlated columns exercise the coupled case
      for (std::size_t i = 0; i < 25; ++i) {
        for (std::size_t c = 1; c < k; ++c) cols[c][i] += 0.7 * cols[0][i];
      }
    }
    const auto y = signal_response(cols, rng, 0.5);
    const DenseDesign design = DenseDesign::from_columns(cols);
    LassoConfig cfg;
    cfg.n_lambda = 20;
    cfg.tol = 1e-12;
    const LassoPath path = fit_path(design, y, cfg);
    Columns xs;
    for (const auto& c : cols) xs.push_back(standardize(c));
    const auto yc = centered(y);
    for (const LassoFit& fit : path.fits) {
      const auto expected = qp_lasso(xs, yc, fit.lambda);
      for (std::size_t c = 0; c < k; ++c) {
        double m = 0, s = 0;
        reference_stats(cols[c], m, s);
        EXPECT_NEAR(fit.coefficient(c) * s, expected[c], 1e-6) << "rep " << rep << " lambda " << fit.lambda;
      }
    }
  }
}

TEST(Lasso, OrthogonalToyDesign) {
  // Centered, mutually orthogonal columns: each coordinate is a separate
  // soft-threshold problem.
  const Columns cols{{1, -1, 1, -1}, {1, 1, -1, -1}, {1, -1, -1, 1}};
  const std::vector<double> y{3, -1, 0.5, 2};
  const auto yc = centered(y);
  Columns xs;
  for (const auto& c : cols) xs.push_back(standardize(c));
  LassoConfig cfg;
  cfg.n_lambda = 10;
  const LassoPath path = fit_path(cols, y, cfg);
  for (const LassoFit& fit : path.fits) {
    const auto expected = qp_lasso(xs, yc, fit.lambda);
    for (std::size_t c = 0; c < 3; ++c) {
      double z = 0;
      for (std::size_t i = 0; i < 4; ++i) z += xs[c][i] * yc[i];
      EXPECT_NEAR(expected[c], soft_threshold(z / 4, fit.lambda), 1e-12);
      EXPECT_NEAR(fit.coefficient(c), expected[c], 1e-6);  // unit sd columns
    }
  }
}

TEST(Lasso, KktHoldsOnEveryFit) {
  std::mt19937_64 rng(5);
  for (std::size_t p : {3u, 20u, 80u}) {
    const Columns cols = random_columns(50, p, rng);
    const auto y = signal_response(cols, rng);
    const LassoPath path = fit_path(cols, y, LassoConfig{});
    EXPECT_TRUE(path.all_converged());
    for (const LassoFit& fit : path.fits) {
      EXPECT_LE(fit.kkt_violation, 1e-6);
      EXPECT_LE(independent_kkt(cols, y, fit), 1e-6) << "p=" << p << " lambda=" << fit.lambda;
    }
  }
}

TEST(Lasso, ObjectiveNonIncreasingAcrossSweeps) {
  std::mt19937_64 rng(6);
  Columns cols = random_columns(40, 15, rng);
  for (std::size_t i = 0; i < 40; ++i) cols[3][i] += 0.9 * cols[2][i];
  const auto y = signal_response(cols, rng);
  LassoConfig cfg;
  cfg.track_objective = true;
  const LassoPath path = fit_path(cols, y, cfg);
  for (const LassoFit& fit : path.fits) {
    for (std::size_t s = 1; s < fit.objective_trace.size(); ++s) {
      EXPECT_LE(fit.objective_trace[s], fit.objective_trace[s - 1] * (1 + 1e-13) + 1e-15);
    }
  }
  const DenseDesign design = DenseDesign::from_columns(cols);
  const LassoFit& last = path.fits.back();
  EXPECT_NEAR(objective(last, design, y), last.objective_trace.back(), 1e-10);
}

TEST(Lasso, ScalingResponseScalesPath) {
  std::mt19937_64 rng(7);
  const Columns cols = random_columns(30, 8, rng);
  const auto y = signal_response(cols, rng);
  const DenseDesign design = DenseDesign::from_columns(cols);
  const LassoPath base = fit_path(design, y, LassoConfig{});
  const double c = 3.5;
  std::vector<double> yc(y), grid(base.lambdas);
  for (double& v : yc) v *= c;
  for (double& v : grid) v *= c;
  const LassoPath scaled = fit_path(design, yc, LassoConfig{}, grid);
  for (std::size_t l = 0; l < grid.size(); ++l) {
    for (std::size_t j = 0; j < 8; ++j) {
      const double a = base.fits[l].coefficient(j) * c;
      EXPECT_NEAR(scaled.fits[l].coefficient(j), a, 1e-10 * std::max(1.0, std::abs(a)));
    }
  }
}

TEST(Lasso, ColumnOrderDoesNotChangeFit) {
  std::mt19937_64 rng(8);
  const Columns cols = random_columns(40, 10, rng);
  const auto y = signal_response(cols, rng);
  Columns rev(cols.rbegin(), cols.rend());
  LassoConfig cfg;
  cfg.tol = 1e-10;
  const DenseDesign d1 = DenseDesign::from_columns(cols);
  const DenseDesign d2 = DenseDesign::from_columns(rev);
  const LassoPath a = fit_path(d1, y, cfg);
  const LassoPath b = fit_path(d2, y, cfg, a.lambdas);
  const RawColumns s1(cols), s2(rev);
  for (std::size_t l = 0; l < a.fits.size(); ++l) {
    const auto f1 = predict(a.fits[l], s1);
    const auto f2 = predict(b.fits[l], s2);
    for (std::size_t i = 0; i < f1.size(); ++i) EXPECT_NEAR(f1[i], f2[i], 1e-8);
  }
}

TEST(Lasso, ZeroVarianceColumnPinnedToZero) {
  std::mt19937_64 rng(9);
  Columns cols = random_columns(20, 3, rng);
  cols.push_back(std::vector<double>(20, 4.0));
  const auto y = signal_response(cols, rng);
  const LassoPath path = fit_path(cols, y, LassoConfig{});
  for (const LassoFit& fit : path.fits) {
    EXPECT_EQ(fit.coefficient(3), 0.0);
    EXPECT_LE(fit.kkt_violation, 1e-6);
  }
}

TEST(Lasso, DuplicateColumnsAreTolerated) {
  std::mt19937_64 rng(10);
  Columns cols = random_columns(30, 3, rng);
  cols.push_back(cols[0]);
  const auto y = signal_response(cols, rng);
  const LassoPath path = fit_path(cols, y, LassoConfig{});
  EXPECT_TRUE(path.all_converged());
  for (const LassoFit& fit : path.fits) EXPECT_LE(independent_kkt(cols, y, fit), 1e-6);
}

TEST(Lasso, RejectsNonFiniteInput) {
  Columns cols{{1, 2, 3}};
  std::vector<double> y{1, std::numeric_limits<double>::infinity(), 0};
  EXPECT_THROW(fit_path(cols, y, LassoConfig{}), InputError);
  cols[0][1] = std::nan("");
  y[1] = 0;
  EXPECT_THROW(fit_path(cols, y, LassoConfig{}), InputError);
}

TEST(Lasso, NonConvergenceIsFlagged) {
  std::mt19937_64 rng(11);
  Columns cols = random_columns(30, 10, rng);
  for (std::size_t i = 0; i < 30; ++i) cols[1][i] = cols[0][i] + 0.01 * cols[1][i];
  const auto y = signal_response(cols, rng);
  LassoConfig cfg;
  cfg.max_iter = 1;
  const LassoPath path = fit_path(cols, y, cfg);
  EXPECT_FALSE(path.all_converged());
}

TEST(Lasso, PredictReproducesFittedValues) {
  std::mt19937_64 rng(12);
  const Columns cols = random_columns(30, 5, rng);
  const auto y = signal_response(cols, rng);
  const LassoPath path = fit_path(cols, y, LassoConfig{});
  const RawColumns source(cols);
  const LassoFit& fit = path.fits[50];
  const auto yhat = predict(fit, source);
  for (std::size_t i = 0; i < y.size(); ++i) {
    double f = fit.intercept;
    for (const auto& [c, b] : fit.coefficients) f += b * cols[c][i];
    EXPECT_NEAR(yhat[i], f, 1e-10);
  }
  const auto flat = predict(path.fits[0], source);
  for (double v : flat) EXPECT_EQ(v, path.fits[0].intercept);

  // intercept = mean(y - Xβ)
  double s = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    double xb = 0;
    for (const auto& [c, b] : fit.coefficients) xb += b * cols[c][i];
    s += y[i] - xb;
  }
  EXPECT_NEAR(fit.intercept, s / 30.0, 1e-10);
}

TEST(Lasso, PredictOnTermsRejectsUnresolvedColumns) {
  LassoFit fit;
  fit.coefficients = {{0, 1.0}, {1, 2.0}};
  const Dataset d(2, 2, {1, 2, 3, 4});
  const std::vector<Term> terms{Term::main(0)};
  EXPECT_THROW(predict(fit, d, terms), SchemaError);
  const std::vector<Term> bad{Term::main(0), Term::pair(0, 5)};
  EXPECT_THROW(predict(fit, d, bad), SchemaError);
  const std::vector<Term> good{Term::main(1), Term::pair(0, 1)};
  const auto y = predict(fit, d, good);
  EXPECT_EQ(y[0], 3.0 + 2.0 * 3.0);
}

TEST(Lasso, StreamedAllPairsDesignMatchesMaterialized) {
  std::mt19937_64 rng(13);
  const Dataset data = sprinter::testing::random_gaussian(40, 9, rng);
  const auto y = random_vector(40, rng);
  const AllPairsColumns dense_source(data, std::size_t{1} << 30);
  const AllPairsColumns stream_source(data, 0);
  ASSERT_FALSE(dense_source.streams(40));
  ASSERT_TRUE(stream_source.streams(40));
  const auto dense = dense_source.design({});
  const auto streamed = stream_source.design({});
  ASSERT_EQ(dense->cols(), 9u + 45u);
  std::vector<double> g1(dense->cols()), g2(dense->cols());
  dense->gradient(y, g1);
  streamed->gradient(y, g2);
  std::vector<double> scratch;
  for (std::size_t c = 0; c < dense->cols(); ++c) {
    EXPECT_EQ(dense->stats(c).mean, streamed->stats(c).mean);
    EXPECT_EQ(dense->stats(c).sd, streamed->stats(c).sd);
    EXPECT_NEAR(g1[c], g2[c], 1e-12);
    const auto a = dense->standardized(c, scratch);
    std::vector<double> copy(a.begin(), a.end());
    const auto b = streamed->standardized(c, scratch);
    for (std::size_t i = 0; i < 40; ++i) EXPECT_EQ(copy[i], b[i]);
  }
  const LassoPath p1 = fit_path(*dense, y, LassoConfig{});
  const LassoPath p2 = fit_path(*streamed, y, LassoConfig{}, p1.lambdas);
  for (std::size_t l = 0; l < p1.fits.size(); l += 9) {
    for (std::size_t c = 0; c < dense->cols(); ++c) {
      EXPECT_NEAR(p1.fits[l].coefficient(c), p2.fits[l].coefficient(c), 1e-8);
    }
  }
}

TEST(Lasso, PathStopsOnceVarianceIsExplained) {
  std::mt19937_64 rng(15);
  const Columns cols = random_columns(20, 40, rng);
  const auto y = random_vector(20, rng);
  LassoConfig cfg;
  cfg.lambda_min_ratio = 1e-5;
  const DenseDesign design = DenseDesign::from_columns(cols);
  const LassoPath path = fit_path(design, y, cfg);
  EXPECT_LT(path.fits.size(), 100u);
  EXPECT_GE(path.fits.size(), 5u);
  EXPECT_EQ(path.lambdas.size(), path.fits.size());
  EXPECT_TRUE(path.all_converged());
}

TEST(CrossValidation, FoldsPartitionRows) {
  const auto folds = make_folds(23, 5, 42);
  std::vector<int> seen(23, 0);
  for (const auto& f : folds) {
    EXPECT_GE(f.test.size(), 4u);
    EXPECT_LE(f.test.size(), 5u);
    EXPECT_EQ(f.train.size() + f.test.size(), 23u);
    for (std::size_t i : f.test) ++seen[i];
  }
  for (int s : seen) EXPECT_EQ(s, 1);
  EXPECT_EQ(make_folds(23, 5, 42)[2].test, folds[2].test);
  EXPECT_NE(make_folds(23, 5, 43)[2].test, folds[2].test);
  EXPECT_THROW(make_folds(3, 5, 1), ConfigError);
  EXPECT_THROW(make_folds(10, 1, 1), ConfigError);
}

TEST(CrossValidation, LeaveOneOutOnFiveRows) {
  const Columns cols{{1, 2, 3, 4, 5.5}, {0, 1, 0, 1, 1}};
  const std::vector<double> y{1, 2.5, 2.9, 4.2, 5};
  const CvResult cv = cross_validate(cols, y, 5, 1, LassoConfig{});
  ASSERT_TRUE(cv.path.cv);
  EXPECT_EQ(cv.path.cv->mean.size(), cv.path.lambdas.size());
  EXPECT_EQ(cv.best_lambda, cv.path.lambdas[cv.best_index]);
}

TEST(CrossValidation, ConstantResponseFoldAllowed) {
  const Columns cols{{1, 2, 3, 4, 5, 6}};
  const std::vector<double> y{1, 1, 1, 1, 1, 2};
  EXPECT_NO_THROW(cross_validate(cols, y, 3, 1, LassoConfig{}));
}

TEST(CrossValidation, PureNoiseSelectsSparseModels) {
  // The minimum-error rule lands on the largest lambda in about half of the
  // seeds; the rest pick a nearby lambda with only a few small coefficients.
  int largest = 0, sparse = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    std::mt19937_64 rng(1000 + seed);
    const Columns cols = random_columns(100, 10, rng);
    const auto y = random_vector(100, rng);
    const CvResult cv = cross_validate(cols, y, 5, seed, LassoConfig{});
    largest += cv.best_index == 0 ? 1 : 0;
    sparse += cv.best_fit().coefficients.size() <= 5 ? 1 : 0;
    EXPECT_LE(cv.path.cv->mean[cv.best_index], cv.path.cv->mean[0]);
  }
  RecordProperty("largest_lambda_selected", largest);
  EXPECT_GE(largest, 20) << largest << " of 50 seeds selected the largest lambda";
  EXPECT_GE(sparse, 45);
}

TEST(CrossValidation, StrongSinglePredictorAlwaysSelected) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(5000 + seed);
    const Columns cols = random_columns(50, 10, rng);
    auto y = random_vector(50, rng);
    for (std::size_t i = 0; i < 50; ++i) y[i] = 5.0 * cols[3][i] + 0.1 * y[i];
    const CvResult cv = cross_validate(cols, y, 5, seed, LassoConfig{});
    EXPECT_NE(cv.best_fit().coefficient(3), 0.0) << "seed " << seed;
  }
}

TEST(CrossValidation, IndependentOfWorkerCount) {
  std::mt19937_64 rng(14);
  const Columns cols = random_columns(60, 12, rng);
  const auto y = signal_response(cols, rng);
  LassoConfig one, many;
  one.threads = 1;
  many.threads = 4;
  const CvResult a = cross_validate(cols, y, 5, 3, one);
  const CvResult b = cross_validate(cols, y, 5, 3, many);
  EXPECT_EQ(a.best_index, b.best_index);
  EXPECT_EQ(a.path.cv->mean, b.path.cv->mean);
  EXPECT_EQ(a.path.cv->se, b.path.cv->se);
}
