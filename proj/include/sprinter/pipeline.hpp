#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sprinter/core.hpp"
#include "sprinter/lasso.hpp"
#include "sprinter/screen.hpp"

namespace sprinter::pipeline {

enum class Method { sprinter, apl, mel, sis, oracle_ls };

std::string_view method_name(Method m) noexcept;
/// Throws ConfigError for unknown names.
Method parse_method(std::string_view name);

struct ResourceLimits {
  /// APL designs are materialized below this size and streamed above it.
  std::size_t materialize_budget_bytes = std::size_t{256} << 20;
  /// Estimated peak footprint of an APL fit must stay below this.
  std::size_t memory_budget_bytes = std::size_t{3} << 30;
  /// APL refuses p above this.
  std::size_t apl_max_p = 5000;

  /// Defaults, with SPRINTER_MEMORY_BUDGET (bytes; K/M/G suffixes) applied.
  static ResourceLimits from_environment();
};

struct SprinterConfig {
  bool include_squares_step1 = true;
  screen::Mode mode = screen::Mode::top_m;
  /// Top-m budget; unset means m = n. m = 0 skips screening (main effects only).
  std::optional<std::size_t> m;
  /// Threshold mode cutoff; +inf skips screening.
  double eta = 0.0;
  std::size_t folds = 5;
  std::uint64_t seed = 1;
  lasso::LassoConfig lasso;
  std::size_t threads = 0;
  ResourceLimits limits;
};

/// Intermediate state of a sprinter fit (Steps 1 and 2).
struct SprinterSteps {
  std::vector<Term> step1_terms;
  lasso::LassoFit step1;
  std::vector<double> step1_lambdas;
  lasso::CvErrors step1_cv;
  std::vector<double> residual;  // y - ŷ₁ on the training data
  screen::ScreenResult screened;
  bool screening_skipped = false;
};

/// A fitted model of any method. Coefficient ids of `fit` index `terms`.
struct Model {
  Method method = Method::sprinter;
  std::size_t p = 0;
  std::uint64_t seed = 0;
  std::vector<Term> terms;
  lasso::LassoFit fit;
  std::vector<double> lambdas;
  std::optional<lasso::CvErrors> cv;
  std::size_t best_index = 0;
  std::optional<SprinterSteps> steps;  // sprinter only
  /// Pairs that passed screening (sprinter, SIS); for SIS main effects may appear too.
  std::vector<screen::ScreenScore> screened;
  std::vector<std::string> warnings;

  std::vector<double> predict(const Dataset& data) const;
  /// Terms with nonzero coefficients and their original-scale values.
  std::vector<std::pair<Term, double>> coefficients() const;
};

Model fit_sprinter(const Dataset& data, const SprinterConfig& config);
/// CV lasso over all p + q columns.
Model fit_apl(const Dataset& data, const SprinterConfig& config);
/// CV lasso over the p main effects.
Model fit_mel(const Dataset& data, const SprinterConfig& config);
/// Keeps the m columns among all p + q with the largest |cor(column, y)|,
/// then CV lasso on them.
Model fit_sis_lasso(const Dataset& data, std::size_t m, const SprinterConfig& config);
/// Unpenalized least squares with intercept on exactly `support`.
Model fit_oracle_ls(const Dataset& data, const std::vector<Term>& support);

/// Dispatches on method; `support` is only used by oracle_ls, `sis_m` by sis
/// (unset: n).
Model fit(Method method, const Dataset& data, const SprinterConfig& config,
          const std::vector<Term>& support = {}, std::optional<std::size_t> sis_m = std::nullopt);

struct Evaluation {
  double mse = 0.0;
  /// ‖y - ŷ‖² / ‖y‖²; unset when ‖y‖ = 0.
  std::optional<double> r_squared_normalized;
};

Evaluation evaluate(const Model& model, const Dataset& test);
Evaluation evaluate_predictions(std::span<const double> y, std::span<const double> y_hat);

/// Step-3 column order: the Step-1 terms (mains, plus squares when Step 1 used
/// them), then the selected pairs by tau index. A selected square that repeats
/// a Step-1 square is kept; the lasso handles the duplicate.
std::vector<Term> step3_terms(const std::vector<Term>& step1_terms, const std::vector<screen::ScreenScore>& selected);

}  // namespace sprinter::pipeline
