#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <random>
#include <string>

#include "sprinter/lasso.hpp"
#include "sprinter/parallel.hpp"
#include "sprinter/simd/kernels.hpp"

namespace sprinter::lasso {

double LassoFit::coefficient(std::size_t column) const noexcept {
  auto it = std::lower_bound(coefficients.begin(), coefficients.end(), column,
                             [](const auto& entry, std::size_t c) { return entry.first < c; });
  return it != coefficients.end() && it->first == column ? it->second : 0.0;
}

bool LassoPath::all_converged() const noexcept {
  return std::all_of(fits.begin(), fits.end(), [](const LassoFit& f) { return f.converged; });
}

namespace {

constexpr std::size_t kMinPathLength = 5;
// Sweeps without convergence before trying an active-set solve.
constexpr std::size_t kPolishAfter = 16;

void check_response(const Design& design, std::span<const double> y) {
  if (y.size() != design.rows()) {
    throw InputError("lasso: response has " + std::to_string(y.size()) + " values, design has " +
                     std::to_string(design.rows()) + " rows");
  }
  for (double v : y) {
    if (!std::isfinite(v)) throw InputError("lasso: non-finite response value");
  }
}

void check_config(const LassoConfig& config) {
  if (config.n_lambda == 0) throw ConfigError("lasso: n_lambda must be positive");
  if (!(config.tol > 0.0)) throw ConfigError("lasso: tol must be positive");
  if (config.max_iter == 0) throw ConfigError("lasso: max_iter must be positive");
  if (config.lambda_min_ratio && !(*config.lambda_min_ratio > 0.0 && *config.lambda_min_ratio < 1.0)) {
    throw ConfigError("lasso: lambda_min_ratio must lie in (0, 1)");
  }
  if (!(config.max_deviance_ratio > 0.0) || !(config.min_deviance_change >= 0.0)) {
    throw ConfigError("lasso: deviance stopping rules must be positive");
  }
}

std::vector<double> centered(std::span<const double> y, double& mean) {
  mean = column_stats(y).mean;
  std::vector<double> r(y.begin(), y.end());
  for (double& v : r) v -= mean;
  return r;
}

// Standardized columns of the active set. Materialized designs hand out
// stable views; streamed designs are cached here once a column turns active.
class ColumnCache {
 public:
  explicit ColumnCache(const Design& design) : design_(design) {}

  std::span<const double> get(std::size_t c) {
    if (design_.materialized()) return design_.standardized(c, scratch_);
    auto it = cache_.find(c);
    if (it == cache_.end()) {
      std::vector<double> col;
      design_.standardized(c, col);
      it = cache_.emplace(c, std::move(col)).first;
    }
    return it->second;
  }

 private:
  const Design& design_;
  std::vector<double> scratch_;
  std::map<std::size_t, std::vector<double>> cache_;
};

}  // namespace

double lambda_max(const Design& design, std::span<const double> y) {
  check_response(design, y);
  double mean = 0.0;
  const std::vector<double> r = centered(y, mean);
  std::vector<double> g(design.cols());
  design.gradient(r, g);
  double best = 0.0;
  for (double v : g) best = std::max(best, std::abs(v));
  return best;
}

std::vector<double> lambda_grid(const Design& design, std::span<const double> y, const LassoConfig& config) {
  check_config(config);
  double top = lambda_max(design, y);
  if (!(top > 0.0) || !std::isfinite(top)) top = 1.0;
  const double ratio = config.lambda_min_ratio.value_or(design.rows() < design.cols() ? 1e-2 : 1e-4);
  std::vector<double> grid(config.n_lambda);
  if (config.n_lambda == 1) {
    grid[0] = top;
    return grid;
  }
  const double step = std::log(ratio) / static_cast<double>(config.n_lambda - 1);
  for (std::size_t i = 0; i < config.n_lambda; ++i) grid[i] = top * std::exp(step * static_cast<double>(i));
  return grid;
}

LassoPath fit_path(const Design& design, std::span<const double> y, const LassoConfig& config,
                   std::span<const double> lambdas, std::optional<std::size_t> stop_after) {
  check_config(config);
  check_response(design, y);
  const std::size_t n = design.rows();
  const std::size_t cols = design.cols();
  const auto& kern = simd::active();

  LassoPath path;
  path.lambdas = lambdas.empty() ? lambda_grid(design, y, config) : std::vector<double>(lambdas.begin(), lambdas.end());
  for (std::size_t i = 0; i < path.lambdas.size(); ++i) {
    const double lam = path.lambdas[i];
    if (!(lam > 0.0) || !std::isfinite(lam)) throw ConfigError("lasso: lambda values must be positive and finite");
    if (i > 0 && lam > path.lambdas[i - 1]) throw ConfigError("lasso: lambda sequence must be non-increasing");
  }
  if (stop_after && *stop_after + 1 < path.lambdas.size()) path.lambdas.resize(*stop_after + 1);

  double ybar = 0.0;
  std::vector<double> res = centered(y, ybar);
  double sdy = column_stats(y).sd;
  if (!(sdy > 0.0)) sdy = 1.0;
  const double threshold = config.tol * sdy;
  const double tss = kern.dot(res.data(), res.data(), n);
  double prev_ratio = 0.0;
  const double inv_n = 1.0 / static_cast<double>(n);

  std::vector<ColumnStats> stats(cols);
  std::vector<char> constant(cols);
  for (std::size_t c = 0; c < cols; ++c) {
    stats[c] = design.stats(c);
    constant[c] = degenerate_variance(stats[c].sd * stats[c].sd, stats[c].mean);
  }

  std::vector<double> beta(cols, 0.0);
  std::vector<char> in_active(cols, 0);
  std::vector<std::size_t> active;
  std::vector<std::span<const double>> active_cols;
  std::vector<double> active_norm;  // n⁻¹ x̃ᵀx̃, 1 up to rounding
  ColumnCache cache(design);

  std::vector<double> grad(cols);
  design.gradient(res, grad);

  auto add_violators = [&](double lam) {
    bool added = false;
    for (std::size_t c = 0; c < cols; ++c) {
      if (in_active[c] || constant[c] || !(std::abs(grad[c]) > lam)) continue;
      in_active[c] = 1;
      active.push_back(c);
      const auto col = cache.get(c);
      active_cols.push_back(col);
      active_norm.push_back(kern.dot(col.data(), col.data(), n) * inv_n);
      added = true;
    }
    return added;
  };

  auto objective_now = [&](double lam) {
    double rss = kern.dot(res.data(), res.data(), n);
    double l1 = 0.0;
    for (std::size_t c : active) l1 += std::abs(beta[c]);
    return 0.5 * rss * inv_n + lam * l1;
  };

  // When coordinate descent crawls (nearly collinear active columns), jump to
  // the stationary point of the quadratic on the current support and signs,
  // or as far toward it as the signs allow. Undone if the objective goes up.
  std::vector<std::size_t> support;
  std::vector<double> saved_res, saved_beta;
  auto polish = [&](double lam) {
    support.clear();
    for (std::size_t a = 0; a < active.size(); ++a) {
      if (beta[active[a]] != 0.0) support.push_back(a);
    }
    const std::size_t k = support.size();
    if (k == 0 || k >= n) return;
    const auto kk = static_cast<Eigen::Index>(k);
    Eigen::MatrixXd gram(kk, kk);
    Eigen::VectorXd rhs(kk);
    for (Eigen::Index i = 0; i < kk; ++i) {
      const double* ci = active_cols[support[i]].data();
      rhs(i) = kern.dot(ci, res.data(), n) * inv_n - std::copysign(lam, beta[active[support[i]]]);
      for (Eigen::Index j = 0; j <= i; ++j) {
        gram(i, j) = gram(j, i) = kern.dot(ci, active_cols[support[j]].data(), n) * inv_n;
      }
    }
    const Eigen::LLT<Eigen::MatrixXd> llt(gram);
    if (llt.info() != Eigen::Success) return;
    const Eigen::VectorXd diag = llt.matrixL().toDenseMatrix().diagonal();
    if (!(diag.minCoeff() > 1e-6 * diag.maxCoeff())) return;
    const Eigen::VectorXd delta = llt.solve(rhs);
    // Step toward the solve, stopping where the first coefficient reaches 0.
    double step = 1.0;
    Eigen::Index hit = -1;
    for (Eigen::Index i = 0; i < kk; ++i) {
      const double b = beta[active[support[i]]];
      if (!std::isfinite(delta(i))) return;
      if ((b + delta(i)) * b <= 0.0 && -b / delta(i) < step) {
        step = -b / delta(i);
        hit = i;
      }
    }
    const double before = objective_now(lam);
    saved_res = res;
    saved_beta.resize(k);
    for (Eigen::Index i = 0; i < kk; ++i) {
      double& b = beta[active[support[i]]];
      saved_beta[i] = b;
      const double updated = i == hit ? 0.0 : b + step * delta(i);
      kern.axpy(-(updated - b), active_cols[support[i]].data(), res.data(), n);
      b = updated;
    }
    if (objective_now(lam) > before) {
      res.swap(saved_res);
      for (Eigen::Index i = 0; i < kk; ++i) beta[active[support[i]]] = saved_beta[i];
    }
  };

  path.fits.reserve(path.lambdas.size());
  for (const double lam : path.lambdas) {
    LassoFit fit;
    fit.lambda = lam;
    std::size_t sweeps = 0;
    std::size_t next_polish = kPolishAfter;
    bool converged = false;

    add_violators(lam);
    while (true) {
      bool cd_converged = false;
      while (sweeps < config.max_iter) {
        double max_delta = 0.0;
        for (std::size_t a = 0; a < active.size(); ++a) {
          const std::size_t c = active[a];
          const auto col = active_cols[a];
          const double v = active_norm[a];
          const double z = kern.dot(col.data(), res.data(), n) * inv_n + v * beta[c];
          const double updated = soft_threshold(z, lam) / v;
          const double delta = updated - beta[c];
          if (delta != 0.0) {
            kern.axpy(-delta, col.data(), res.data(), n);
            beta[c] = updated;
            max_delta = std::max(max_delta, std::abs(delta));
          }
        }
        ++sweeps;
        if (config.track_objective) fit.objective_trace.push_back(objective_now(lam));
        if (max_delta < threshold) {
          cd_converged = true;
          break;
        }
        if (sweeps >= next_polish) {
          polish(lam);
          next_polish = sweeps + std::max(kPolishAfter, active.size());
        }
      }
      design.gradient(res, grad);
      if (!cd_converged) break;
      if (!add_violators(lam)) {
        converged = true;
        break;
      }
    }

    double kkt = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      if (constant[c]) continue;
      const double violation = beta[c] == 0.0 ? std::max(0.0, std::abs(grad[c]) - lam)
                                              : std::abs(grad[c] - std::copysign(lam, beta[c]));
      kkt = std::max(kkt, violation);
    }

    std::vector<std::size_t> nonzero;
    for (std::size_t c : active) {
      if (beta[c] != 0.0) nonzero.push_back(c);
    }
    std::sort(nonzero.begin(), nonzero.end());
    double intercept = ybar;
    for (std::size_t c : nonzero) {
      const double b = beta[c] / stats[c].sd;
      fit.coefficients.emplace_back(c, b);
      intercept -= b * stats[c].mean;
    }
    fit.intercept = intercept;
    fit.n_iterations = sweeps;
    fit.converged = converged;
    fit.kkt_violation = kkt;
    path.fits.push_back(std::move(fit));

    if (tss > 0.0 && path.fits.size() >= kMinPathLength) {
      const double ratio = 1.0 - kern.dot(res.data(), res.data(), n) / tss;
      if (ratio > config.max_deviance_ratio || ratio - prev_ratio < config.min_deviance_change * ratio) break;
      prev_ratio = ratio;
    } else if (tss > 0.0) {
      prev_ratio = 1.0 - kern.dot(res.data(), res.data(), n) / tss;
    }
  }
  path.lambdas.resize(path.fits.size());
  return path;
}

LassoPath fit_path(std::span<const std::vector<double>> columns, std::span<const double> y,
                   const LassoConfig& config) {
  const DenseDesign design = DenseDesign::from_columns(columns);
  return fit_path(design, y, config);
}

std::vector<double> predict(const LassoFit& fit, const ColumnSource& source, std::span<const std::size_t> rows) {
  const std::size_t m = rows.empty() ? source.rows() : rows.size();
  std::vector<double> out(m, fit.intercept);
  std::vector<double> col(m);
  const auto& kern = simd::active();
  for (const auto& [c, b] : fit.coefficients) {
    if (c >= source.cols()) throw SchemaError("predict: coefficient column " + std::to_string(c) + " out of range");
    source.column(c, rows, col);
    kern.axpy(b, col.data(), out.data(), m);
  }
  return out;
}

std::vector<double> predict(const LassoFit& fit, const Dataset& data, std::span<const Term> terms) {
  std::vector<double> out(data.n(), fit.intercept);
  std::vector<double> col(data.n());
  const auto& kern = simd::active();
  for (const auto& [c, b] : fit.coefficients) {
    if (c >= terms.size()) throw SchemaError("predict: coefficient column " + std::to_string(c) + " has no term");
    const Term& t = terms[c];
    if (t.j >= data.p() || (t.is_pair() && t.k >= data.p())) {
      throw SchemaError("predict: term " + to_string(t) + " needs more than the " + std::to_string(data.p()) +
                        " columns of the input");
    }
    term_column(data, t, col);
    kern.axpy(b, col.data(), out.data(), data.n());
  }
  return out;
}

double objective(const LassoFit& fit, const Design& design, std::span<const double> y) {
  check_response(design, y);
  const std::size_t n = design.rows();
  double ybar = 0.0;
  std::vector<double> res = centered(y, ybar);
  std::vector<double> scratch;
  double l1 = 0.0;
  for (const auto& [c, b] : fit.coefficients) {
    const double bt = b * design.stats(c).sd;
    const auto col = design.standardized(c, scratch);
    for (std::size_t i = 0; i < n; ++i) res[i] -= bt * col[i];
    l1 += std::abs(bt);
  }
  double rss = 0.0;
  for (double r : res) rss += r * r;
  return 0.5 * rss / static_cast<double>(n) + fit.lambda * l1;
}

// ---------------------------------------------------------------------------
// Cross-validation

std::vector<FoldSplit> make_folds(std::size_t n, std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw ConfigError("cv: need at least 2 folds");
  if (folds > n) {
    throw ConfigError("cv: " + std::to_string(folds) + " folds but only " + std::to_string(n) + " rows");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> fold_of(n);
  for (std::size_t i = 0; i < n; ++i) fold_of[order[i]] = i % folds;
  std::vector<FoldSplit> splits(folds);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < folds; ++f) {
      (fold_of[i] == f ? splits[f].test : splits[f].train).push_back(i);
    }
  }
  return splits;
}

CvErrors cv_errors(const std::vector<FoldSplit>& folds, std::size_t n_lambda, const FoldEvaluator& evaluate,
                   std::size_t threads) {
  std::vector<std::vector<double>> sse(folds.size());
  parallel_for(folds.size(), resolve_threads(threads), [&](std::size_t f) {
    sse[f] = evaluate(folds[f]);
    if (sse[f].size() != n_lambda) throw Error("cv: fold evaluator returned the wrong number of errors");
  });
  std::size_t n = 0;
  for (const auto& f : folds) n += f.test.size();
  CvErrors out;
  out.mean.assign(n_lambda, 0.0);
  out.se.assign(n_lambda, 0.0);
  const double k = static_cast<double>(folds.size());
  for (std::size_t l = 0; l < n_lambda; ++l) {
    double total = 0.0;
    for (std::size_t f = 0; f < folds.size(); ++f) total += sse[f][l];
    const double mean = total / static_cast<double>(n);
    double spread = 0.0;
    for (std::size_t f = 0; f < folds.size(); ++f) {
      const double nf = static_cast<double>(folds[f].test.size());
      const double d = sse[f][l] / nf - mean;
      spread += nf * d * d;
    }
    out.mean[l] = mean;
    out.se[l] = k > 1 ? std::sqrt(spread / (static_cast<double>(n) * (k - 1))) : 0.0;
  }
  return out;
}

std::size_t best_index(const CvErrors& errors) noexcept {
  std::size_t best = 0;
  for (std::size_t l = 1; l < errors.mean.size(); ++l) {
    if (errors.mean[l] < errors.mean[best]) best = l;
  }
  return best;
}

std::vector<double> lasso_fold_errors(const ColumnSource& source, std::span<const double> y, const FoldSplit& fold,
                                      std::span<const double> lambdas, const LassoConfig& config) {
  const auto design = source.design(fold.train);
  std::vector<double> y_train(fold.train.size());
  for (std::size_t i = 0; i < fold.train.size(); ++i) y_train[i] = y[fold.train[i]];
  const LassoPath path = fit_path(*design, y_train, config, lambdas);

  const std::size_t m = fold.test.size();
  std::map<std::size_t, std::vector<double>> test_cols;
  std::vector<double> sse(lambdas.size(), 0.0);
  std::vector<double> pred(m);
  for (std::size_t l = 0; l < path.fits.size(); ++l) {
    const LassoFit& fit = path.fits[l];
    std::fill(pred.begin(), pred.end(), fit.intercept);
    for (const auto& [c, b] : fit.coefficients) {
      auto it = test_cols.find(c);
      if (it == test_cols.end()) {
        std::vector<double> col(m);
        source.column(c, fold.test, col);
        it = test_cols.emplace(c, std::move(col)).first;
      }
      for (std::size_t i = 0; i < m; ++i) pred[i] += b * it->second[i];
    }
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double e = y[fold.test[i]] - pred[i];
      s += e * e;
    }
    sse[l] = s;
  }
  for (std::size_t l = path.fits.size(); l < sse.size(); ++l) sse[l] = sse[path.fits.size() - 1];
  return sse;
}

CvResult cross_validate(const ColumnSource& source, std::span<const double> y, std::size_t folds, std::uint64_t seed,
                        const LassoConfig& config) {
  CvResult out;
  {
    const auto full = source.design({});
    out.path = fit_path(*full, y, config);
  }
  const auto splits = make_folds(source.rows(), folds, seed);
  const std::vector<double>& grid = out.path.lambdas;
  out.path.cv = cv_errors(
      splits, grid.size(),
      [&](const FoldSplit& fold) { return lasso_fold_errors(source, y, fold, grid, config); }, config.threads);
  out.best_index = best_index(*out.path.cv);
  out.best_lambda = grid[out.best_index];
  return out;
}

CvResult cross_validate(std::span<const std::vector<double>> columns, std::span<const double> y, std::size_t folds,
                        std::uint64_t seed, const LassoConfig& config) {
  const RawColumns source(std::vector<std::vector<double>>(columns.begin(), columns.end()));
  return cross_validate(source, y, folds, seed, config);
}

}  // namespace sprinter::lasso
