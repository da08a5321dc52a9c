#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sprinter/core.hpp"

namespace sprinter::lasso {

// ---------------------------------------------------------------------------
// Designs
// ---------------------------------------------------------------------------

/// A standardized design over a fixed set of rows. Column c is
/// x̃_c = (x_c - mean_c) / sd_c with sample statistics of divisor n, so that
/// x̃_cᵀx̃_c = n. Constant columns (see degenerate_variance) standardize to zero
/// and never enter a fit.
class Design {
 public:
  virtual ~Design() = default;

  virtual std::size_t rows() const noexcept = 0;
  virtual std::size_t cols() const noexcept = 0;

  /// Raw-scale statistics of column c on this design's rows.
  virtual ColumnStats stats(std::size_t c) const = 0;
  bool constant(std::size_t c) const {
    const ColumnStats s = stats(c);
    return degenerate_variance(s.sd * s.sd, s.mean);
  }

  /// out[c] = n⁻¹ x̃_cᵀ v for every column (zero for constant columns).
  virtual void gradient(std::span<const double> v, std::span<double> out) const = 0;

  /// Standardized column c. May return a view into the design's storage or
  /// fill `scratch` (resized to rows()) and return a view of it.
  virtual std::span<const double> standardized(std::size_t c, std::vector<double>& scratch) const = 0;

  /// True when standardized() returns stable views that need no caching.
  virtual bool materialized() const noexcept = 0;
};

/// Design holding every standardized column in memory.
class DenseDesign final : public Design {
 public:
  /// Standardizes `cols` raw columns produced by fill(c, out) on `rows` rows.
  DenseDesign(std::size_t rows, std::size_t cols,
              const std::function<void(std::size_t, std::span<double>)>& fill);

  static DenseDesign from_columns(std::span<const std::vector<double>> columns);

  std::size_t rows() const noexcept override { return n_; }
  std::size_t cols() const noexcept override { return stats_.size(); }
  ColumnStats stats(std::size_t c) const override { return stats_.at(c); }
  void gradient(std::span<const double> v, std::span<double> out) const override;
  std::span<const double> standardized(std::size_t c, std::vector<double>& scratch) const override;
  bool materialized() const noexcept override { return true; }

 private:
  std::size_t n_;
  std::vector<ColumnStats> stats_;
  std::vector<double> values_;  // column-major, standardized
};

/// All p main effects followed by all q interactions in tau order, with
/// interaction columns generated on the fly. Memory is O(np + q) (per-column
/// statistics) instead of the O(nq) of a materialized design.
class AllPairsDesign final : public Design {
 public:
  explicit AllPairsDesign(Dataset data, std::size_t threads = 0);

  std::size_t rows() const noexcept override { return data_.n(); }
  std::size_t cols() const noexcept override { return stats_.size(); }
  ColumnStats stats(std::size_t c) const override { return stats_.at(c); }
  void gradient(std::span<const double> v, std::span<double> out) const override;
  std::span<const double> standardized(std::size_t c, std::vector<double>& scratch) const override;
  bool materialized() const noexcept override { return false; }

 private:
  Dataset data_;
  TauMap tau_;
  std::size_t threads_;
  std::vector<double> squares_;  // column-major x_j²
  std::vector<ColumnStats> stats_;
};

/// Raw columns of a design matrix over all rows, able to produce standardized
/// designs on row subsets (for cross-validation) and raw values for prediction.
class ColumnSource {
 public:
  virtual ~ColumnSource() = default;
  virtual std::size_t rows() const noexcept = 0;
  virtual std::size_t cols() const noexcept = 0;
  /// Raw values of column c on `rows` (all rows when empty).
  virtual void column(std::size_t c, std::span<const std::size_t> rows, std::span<double> out) const = 0;
  /// Standardized design on `rows` (all rows when empty).
  virtual std::unique_ptr<Design> design(std::span<const std::size_t> rows) const = 0;
};

/// Caller-supplied raw columns.
class RawColumns final : public ColumnSource {
 public:
  explicit RawColumns(std::vector<std::vector<double>> columns);
  std::size_t rows() const noexcept override { return n_; }
  std::size_t cols() const noexcept override { return columns_.size(); }
  void column(std::size_t c, std::span<const std::size_t> rows, std::span<double> out) const override;
  std::unique_ptr<Design> design(std::span<const std::size_t> rows) const override;

 private:
  std::size_t n_ = 0;
  std::vector<std::vector<double>> columns_;
};

/// Columns given by a term list over a dataset; designs are materialized.
class TermColumns final : public ColumnSource {
 public:
  TermColumns(const Dataset& data, std::vector<Term> terms);
  std::size_t rows() const noexcept override { return data_->n(); }
  std::size_t cols() const noexcept override { return terms_.size(); }
  void column(std::size_t c, std::span<const std::size_t> rows, std::span<double> out) const override;
  std::unique_ptr<Design> design(std::span<const std::size_t> rows) const override;
  const std::vector<Term>& terms() const noexcept { return terms_; }

 private:
  const Dataset* data_;
  std::vector<Term> terms_;
};

/// Every main effect and every interaction. Designs are materialized when
/// n·(p+q) doubles fit in `materialize_budget_bytes`, streamed otherwise.
class AllPairsColumns final : public ColumnSource {
 public:
  AllPairsColumns(const Dataset& data, std::size_t materialize_budget_bytes, std::size_t threads = 0);
  std::size_t rows() const noexcept override { return data_->n(); }
  std::size_t cols() const noexcept override { return static_cast<std::size_t>(data_->p() + tau_.q()); }
  void column(std::size_t c, std::span<const std::size_t> rows, std::span<double> out) const override;
  std::unique_ptr<Design> design(std::span<const std::size_t> rows) const override;
  Term term(std::size_t c) const;
  bool streams(std::size_t n_rows) const noexcept;

 private:
  const Dataset* data_;
  TauMap tau_;
  std::size_t budget_;
  std::size_t threads_;
};

// ---------------------------------------------------------------------------
// Fits
// ---------------------------------------------------------------------------

struct LassoConfig {
  std::size_t n_lambda = 100;
  /// Smallest λ as a fraction of λ_max. Unset: 1e-2 when rows < cols, else 1e-4.
  std::optional<double> lambda_min_ratio;
  /// Sweeps stop when the largest standardized coefficient change is below tol·sd(y).
  double tol = 1e-9;
  /// Coordinate sweeps allowed per λ.
  std::size_t max_iter = 100000;
  /// The path stops early (after at least 5 values) once the fraction of
  /// variance explained exceeds max_deviance_ratio, or grows by less than
  /// min_deviance_change relative to its value between consecutive λ.
  /// Set to 1 and 0 to always fit the whole grid.
  double max_deviance_ratio = 0.999;
  double min_deviance_change = 1e-5;
  /// Record the objective after every sweep (diagnostics and tests).
  bool track_objective = false;
  /// Workers for cross-validation folds; 0 = default.
  std::size_t threads = 0;
};

struct LassoFit {
  double lambda = 0.0;
  double intercept = 0.0;
  /// Nonzero coefficients on the original scale, sorted by column id.
  std::vector<std::pair<std::size_t, double>> coefficients;
  std::size_t n_iterations = 0;
  bool converged = false;
  /// Largest KKT residual over all columns at exit, in units of n⁻¹ x̃ᵀ(y - ŷ).
  double kkt_violation = 0.0;
  std::vector<double> objective_trace;

  double coefficient(std::size_t column) const noexcept;
};

struct CvErrors {
  std::vector<double> mean;
  std::vector<double> se;
};

struct LassoPath {
  std::vector<double> lambdas;
  std::vector<LassoFit> fits;
  std::optional<CvErrors> cv;

  bool all_converged() const noexcept;
};

double lambda_max(const Design& design, std::span<const double> y);
std::vector<double> lambda_grid(const Design& design, std::span<const double> y, const LassoConfig& config);

/// Warm-started coordinate descent along `lambdas` (the default grid when
/// empty). `stop_after` limits the path to its first stop_after + 1 values.
/// The returned path may be shorter than the grid (see LassoConfig).
LassoPath fit_path(const Design& design, std::span<const double> y, const LassoConfig& config,
                   std::span<const double> lambdas = {},
                   std::optional<std::size_t> stop_after = std::nullopt);
LassoPath fit_path(std::span<const std::vector<double>> columns, std::span<const double> y,
                   const LassoConfig& config);

/// ŷ = intercept + Σ coef_c · column_c(rows).
std::vector<double> predict(const LassoFit& fit, const ColumnSource& source,
                            std::span<const std::size_t> rows = {});
/// ŷ on a new dataset; coefficient ids index into `terms`.
std::vector<double> predict(const LassoFit& fit, const Dataset& data, std::span<const Term> terms);

/// Objective (1/2n)‖y - ŷ‖² + λ Σ|β̃_c| for a fit over `design`.
double objective(const LassoFit& fit, const Design& design, std::span<const double> y);

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

struct FoldSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// Seeded random partition of n rows into `folds` nearly equal folds.
std::vector<FoldSplit> make_folds(std::size_t n, std::size_t folds, std::uint64_t seed);

/// Per-fold evaluator returning, for every λ index, the sum of squared errors
/// over the fold's test rows.
using FoldEvaluator = std::function<std::vector<double>(const FoldSplit&)>;

/// Runs the evaluator over folds (possibly concurrently) and aggregates
/// mean held-out squared error and its standard error per λ. Aggregation order
/// is fixed, so the result does not depend on the worker count.
CvErrors cv_errors(const std::vector<FoldSplit>& folds, std::size_t n_lambda,
                   const FoldEvaluator& evaluate, std::size_t threads);

std::size_t best_index(const CvErrors& errors) noexcept;

/// Held-out squared-error sums of a lasso path fitted on fold.train with the
/// given grid and evaluated on fold.test. Grid values past an early stop of
/// the fold path reuse its last fit.
std::vector<double> lasso_fold_errors(const ColumnSource& source, std::span<const double> y,
                                      const FoldSplit& fold, std::span<const double> lambdas,
                                      const LassoConfig& config);

struct CvResult {
  double best_lambda = 0.0;
  std::size_t best_index = 0;
  LassoPath path;  // full-data path with cv errors attached

  const LassoFit& best_fit() const { return path.fits.at(best_index); }
};

/// K-fold cross-validation over the grid computed from the full data.
CvResult cross_validate(const ColumnSource& source, std::span<const double> y, std::size_t folds,
                        std::uint64_t seed, const LassoConfig& config);
CvResult cross_validate(std::span<const std::vector<double>> columns, std::span<const double> y,
                        std::size_t folds, std::uint64_t seed, const LassoConfig& config);

inline double soft_threshold(double z, double gamma) noexcept {
  if (z > gamma) return z - gamma;
  if (z < -gamma) return z + gamma;
  return 0.0;
}

}  // namespace sprinter::lasso
