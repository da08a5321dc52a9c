#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sprinter/screen.hpp"

// Population quantities for the two single-interaction designs with closed
// forms (correlated Gaussian and independent Bernoulli features), and
// Monte-Carlo checks of the moment and screening results built on them.

namespace sprinter::oracle {

using Pair = std::pair<std::size_t, std::size_t>;

// ---------------------------------------------------------------------------
// Gaussian features, unit variances

/// Correlation matrix with entries rho^|j-k|.
Eigen::MatrixXd ar_correlation(std::size_t p, double rho);

/// Cov(X_j X_k, X_t X_s) = ρ_jt ρ_ks + ρ_js ρ_kt. ConfigError unless sigma
/// is square with unit diagonal.
double gaussian_interaction_cov(const Eigen::MatrixXd& sigma, Pair jk, Pair ts);
/// Var(X_j X_k) = 1 + ρ_jk²
double gaussian_interaction_var(const Eigen::MatrixXd& sigma, Pair jk);
/// E[(X_j X_k)²] = 1 + 2ρ_jk²
double gaussian_interaction_second_moment(const Eigen::MatrixXd& sigma, Pair jk);

/// Covariance matrix of the interactions in `pairs`.
Eigen::MatrixXd gaussian_interaction_covariance(const Eigen::MatrixXd& sigma, const std::vector<Pair>& pairs);

struct MonteCarloCheck {
  std::string name;
  double analytic = 0.0;
  double estimate = 0.0;
  double relative_error() const noexcept;
};

/// Sample E Z², Var Z and interaction covariances under AR(rho) features,
/// next to their closed forms.
std::vector<MonteCarloCheck> gaussian_moment_checks(double rho, std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Independent Bernoulli features, single interaction Z = X₁X₂

struct BernoulliSignal {
  double psi = 0.0;     // Var(Z)
  double cov_zw = 0.0;  // Cov(Z, W), W the pure interaction
  /// Population score Ψ^{-1/2} Cov(Z, W) γ.
  double omega = 0.0;
  /// (2/3) |1 + p₁p₂ - p₁ - p₂| / (1 - p₁p₂) · |γ|
  double eta = 0.0;
  /// (2/3) |omega|
  double eta_from_omega = 0.0;
};

/// Closed forms. ConfigError unless 0 < p1, p2 < 1.
BernoulliSignal bernoulli_screening_signal(double p1, double p2, double gamma);

/// Ψ and Cov(Z, W) by summing over the four outcomes of (X₁, X₂), with
/// W = Z - (p₂X₁ + p₁X₂).
BernoulliSignal bernoulli_enumerate(double p1, double p2, double gamma);

/// Population Σ = Cov(X), Φ = Cov(X, Z) and Ψ = Cov(Z) for independent
/// Bernoulli(probs) features and the given interactions.
struct PopulationMoments {
  Eigen::MatrixXd sigma;
  Eigen::MatrixXd phi;
  Eigen::MatrixXd psi;
};
PopulationMoments bernoulli_moments(const std::vector<double>& probs, const std::vector<Pair>& pairs);
PopulationMoments gaussian_moments(const Eigen::MatrixXd& sigma, const std::vector<Pair>& pairs);

struct Decomposition {
  Eigen::VectorXd theta_shift;  // Σ⁻¹Φγ
  Eigen::MatrixXd projection;   // Σ⁻¹Φ, so W = Z - projectionᵀ X
  Eigen::MatrixXd omega;        // Ψ - ΦᵀΣ⁻¹Φ
  double condition = 0.0;       // of Σ
  /// max |Φᵀ - (Σ⁻¹Φ)ᵀ Σ|, i.e. Cov(X, W) in finite precision.
  double cov_x_w = 0.0;
};

/// Splits Zᵀγ into the part explained by X and the pure interaction W.
/// NumericError (with the condition number) when Σ is singular.
Decomposition pure_interaction_decompose(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& phi,
                                         const Eigen::MatrixXd& psi, const Eigen::VectorXd& gamma);

// ---------------------------------------------------------------------------
// Moment bound E|U|^k <= 2 ‖U‖^k (k/ν) Γ(k/ν) for sub-Weibull(ν) U

enum class MomentDistribution { gaussian, product2, product3, product4 };

std::string_view distribution_name(MomentDistribution d) noexcept;
MomentDistribution parse_distribution(std::string_view name);
/// 2, 1, 2/3, 1/2: the tail order of a product of that many Gaussians.
double distribution_nu(MomentDistribution d) noexcept;
/// ‖U‖_ψν used in the bound: √(8/3) for a Gaussian, and the product bound
/// (8/3)^(m/2) for a product of m independent standard Gaussians.
double distribution_norm(MomentDistribution d) noexcept;

/// ψ₂ norm of a standard Gaussian from the Orlicz definition
/// E exp(U²/ζ²) = 2, by bisection on ζ with composite Simpson quadrature of
/// the density on [-60, 60] (40,000 panels).
double gaussian_psi2_norm_numeric();

struct MomentCheck {
  MomentDistribution distribution = MomentDistribution::gaussian;
  double nu = 0.0;
  int k = 0;
  double norm = 0.0;
  double lhs = 0.0;  // Monte-Carlo E|U|^k
  double se = 0.0;
  double rhs = 0.0;
  bool holds = false;
};

double moment_bound_rhs(double norm, double nu, int k);
MomentCheck moment_bound_check(MomentDistribution d, int k, std::size_t mc_n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Screening recovery

struct RecoveryScenario {
  std::size_t p = 50;
  double rho = 0.5;
  Pair pair{0, 1};
  double gamma = 3.0;
  std::vector<std::pair<std::size_t, double>> mains{{2, 2.0}, {5, 2.0}};
  double sigma = 1.0;
  screen::Mode mode = screen::Mode::threshold;
  /// Threshold; unset uses η(α) = (2/3)·√(1 + ρ²)·|γ|.
  std::optional<double> eta;
  std::size_t m = 50;
  std::size_t folds = 5;
  bool include_squares = false;
  std::size_t threads = 0;
};

/// Population score of the true pair, √(1 + ρ_jk²)·|γ| (W = Z for Gaussian X).
double gaussian_omega(const RecoveryScenario& s);
double default_eta(const RecoveryScenario& s);
/// 4 η⁻² λ_max(interaction correlation) Var(Wγ).
double selection_budget(const RecoveryScenario& s, double eta);

struct RecoveryRow {
  std::size_t n = 0;
  std::size_t reps = 0;
  std::size_t recovered = 0;
  std::size_t within_budget = 0;
  double mean_selected = 0.0;
  double budget = 0.0;
  double frequency() const noexcept;
  double se() const noexcept;
};

/// For each n and seed: AR(rho) features, y = mains + γ·Z_pair + σε, Step-1
/// CV lasso on main effects, screening of its residual. Counts how often the
/// true pair is selected and how often |Î| stays within the budget.
std::vector<RecoveryRow> screening_recovery_experiment(const RecoveryScenario& scenario,
                                                       const std::vector<std::size_t>& n_grid, std::size_t reps,
                                                       std::uint64_t seed = 1);

/// True when every frequency is at least the previous one minus `slack`
/// binomial standard errors (pooled from both rows).
bool nondecreasing_within_noise(const std::vector<RecoveryRow>& rows, double slack = 3.0);

}  // namespace sprinter::oracle
