#pragma once

// Independent reference computations for tests. None of these call into the
// library's numerical code paths.

#include <cstdint>
#include <random>
#include <vector>

#include "sprinter/core.hpp"

namespace sprinter::testing {

struct BruteScore {
  std::size_t j = 0;
  std::size_t k = 0;
  std::uint64_t ell = 0;
  double cor = 0.0;    // Pearson correlation of the explicit column with r
  double score = 0.0;  // |cor| or sd(r)|cor|
  bool zero_variance = false;
};

/// Every interaction column built explicitly, correlations by two-pass
/// Pearson. Index ell follows (0,0), (0,1), ..., (0,p-1), (1,1), ...
std::vector<BruteScore> brute_force_scores(const Dataset& data, const std::vector<double>& r, bool scale_by_sd);

/// Top m by (score desc, ell asc) among non-zero-variance pairs.
std::vector<BruteScore> brute_force_topm(const Dataset& data, const std::vector<double>& r, std::size_t m);
std::vector<BruteScore> brute_force_threshold(const Dataset& data, const std::vector<double>& r, double eta);

/// Lasso on k <= 3 standardized columns by enumerating all 3^k sign patterns:
/// for each, solve the stationarity system on its support and keep the one
/// that satisfies the sign and subgradient conditions. Returns standardized
/// coefficients; `xs` are standardized columns, `yc` the centered response.
std::vector<double> qp_lasso(const std::vector<std::vector<double>>& xs, const std::vector<double>& yc, double lambda);

/// Column-major n x p Gaussian matrix.
Dataset random_gaussian(std::size_t n, std::size_t p, std::mt19937_64& rng, bool with_response = false);

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng);

/// Mean and sd (divisor n) computed with long double accumulation.
void reference_stats(const std::vector<double>& x, double& mean, double& sd);

}  // namespace sprinter::testing
