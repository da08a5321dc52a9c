#include "sprinter/pipeline.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <string>

#include "sprinter/parallel.hpp"

namespace sprinter::pipeline {

std::string_view method_name(Method m) noexcept {
  switch (m) {
    case Method::sprinter: return "sprinter";
    case Method::apl: return "apl";
    case Method::mel: return "mel";
    case Method::sis: return "sis";
    case Method::oracle_ls: return "oracle_ls";
  }
  return "unknown";
}

Method parse_method(std::string_view name) {
  for (Method m : {Method::sprinter, Method::apl, Method::mel, Method::sis, Method::oracle_ls}) {
    if (method_name(m) == name) return m;
  }
  throw ConfigError("unknown method '" + std::string(name) + "' (expected sprinter, apl, mel, sis or oracle_ls)");
}

ResourceLimits ResourceLimits::from_environment() {
  ResourceLimits limits;
  const char* env = std::getenv("SPRINTER_MEMORY_BUDGET");
  if (env == nullptr || *env == '\0') return limits;
  char* end = nullptr;
  const double value = std::strtod(env, &end);
  double scale = 1.0;
  if (end != nullptr && *end != '\0') {
    switch (*end) {
      case 'k': case 'K': scale = 1024.0; break;
      case 'm': case 'M': scale = 1024.0 * 1024.0; break;
      case 'g': case 'G': scale = 1024.0 * 1024.0 * 1024.0; break;
      default: throw ConfigError(std::string("SPRINTER_MEMORY_BUDGET: cannot parse '") + env + "'");
    }
  }
  if (!(value > 0.0)) throw ConfigError(std::string("SPRINTER_MEMORY_BUDGET: cannot parse '") + env + "'");
  limits.memory_budget_bytes = static_cast<std::size_t>(value * scale);
  return limits;
}

namespace {

void require_response(const Dataset& data) {
  if (!data.has_response()) throw InputError("fit: dataset has no response column");
  if (data.p() == 0) throw InputError("fit: dataset has no feature columns");
}

void check_folds(const Dataset& data, std::size_t folds) {
  if (folds < 2) throw ConfigError("fit: need at least 2 CV folds");
  if (data.n() < folds) {
    throw ConfigError("fit: " + std::to_string(folds) + " CV folds but only " + std::to_string(data.n()) + " rows");
  }
}

lasso::LassoConfig lasso_config(const SprinterConfig& config) {
  lasso::LassoConfig c = config.lasso;
  if (c.threads == 0) c.threads = config.threads;
  return c;
}

Model from_cv(Method method, const Dataset& data, std::vector<Term> terms, lasso::CvResult cv, std::uint64_t seed) {
  Model model;
  model.method = method;
  model.p = data.p();
  model.seed = seed;
  model.terms = std::move(terms);
  model.best_index = cv.best_index;
  model.fit = cv.path.fits.at(cv.best_index);
  model.lambdas = std::move(cv.path.lambdas);
  model.cv = std::move(cv.path.cv);
  if (!model.fit.converged) model.warnings.push_back("lasso did not converge at the selected lambda");
  return model;
}

bool skips_screening(const SprinterConfig& config) {
  if (config.mode == screen::Mode::top_m) return config.m && *config.m == 0;
  return std::isinf(config.eta) && config.eta > 0;
}

// Screening of Step 2; an (effectively) perfect Step-1 fit yields no pairs.
std::optional<screen::ScreenResult> run_screen(const Dataset& data, std::span<const double> r,
                                               const SprinterConfig& config, std::size_t m) {
  screen::ScreenOptions opts;
  opts.threads = config.threads;
  try {
    if (config.mode == screen::Mode::top_m) return screen::screen_topm(data, r, m, opts);
    return screen::screen_threshold(data, r, config.eta, opts);
  } catch (const DegenerateResidualError&) {
    return std::nullopt;
  }
}

bool residual_negligible(std::span<const double> r, std::span<const double> y) {
  const double sd_r = column_stats(r).sd;
  const double sd_y = column_stats(y).sd;
  return !(sd_r > 1e-10 * sd_y);
}

std::vector<double> gather(std::span<const double> v, std::span<const std::size_t> rows) {
  std::vector<double> out(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) out[i] = v[rows[i]];
  return out;
}

}  // namespace

std::vector<Term> step3_terms(const std::vector<Term>& step1_terms, const std::vector<screen::ScreenScore>& selected) {
  std::vector<const screen::ScreenScore*> pairs;
  pairs.reserve(selected.size());
  for (const auto& s : selected) pairs.push_back(&s);
  std::sort(pairs.begin(), pairs.end(), [](const auto* a, const auto* b) { return a->ell < b->ell; });
  std::vector<Term> terms = step1_terms;
  terms.reserve(terms.size() + pairs.size());
  for (const auto* s : pairs) terms.push_back(s->pair);
  return terms;
}

Model fit_sprinter(const Dataset& data, const SprinterConfig& config) {
  require_response(data);
  check_folds(data, config.folds);
  if (config.mode == screen::Mode::threshold && (std::isnan(config.eta) || config.eta < 0)) {
    throw ConfigError("sprinter: eta must be non-negative");
  }
  const lasso::LassoConfig lcfg = lasso_config(config);
  const std::span<const double> y = data.y();
  const std::size_t p = data.p();
  const std::size_t m = config.m.value_or(screen::default_m(data.n()));
  const bool skip = skips_screening(config);

  // Step 1: CV lasso on main effects (and squares).
  SprinterSteps steps;
  steps.step1_terms = main_terms(p, config.include_squares_step1);
  const lasso::TermColumns source1(data, steps.step1_terms);
  lasso::CvResult cv1 = lasso::cross_validate(source1, y, config.folds, config.seed, lcfg);
  const std::size_t best1 = cv1.best_index;
  steps.step1 = cv1.best_fit();
  steps.step1_lambdas = cv1.path.lambdas;
  steps.step1_cv = *cv1.path.cv;
  const std::vector<double> yhat1 = lasso::predict(steps.step1, source1);
  steps.residual.resize(data.n());
  for (std::size_t i = 0; i < data.n(); ++i) steps.residual[i] = y[i] - yhat1[i];

  Model model;
  model.method = Method::sprinter;
  model.p = p;
  model.seed = config.seed;

  // Step 2 on the full data.
  steps.screening_skipped = skip;
  if (!skip) {
    std::optional<screen::ScreenResult> screened;
    if (!residual_negligible(steps.residual, y)) screened = run_screen(data, steps.residual, config, m);
    if (!screened) {
      model.warnings.push_back("step-1 residual is degenerate; no interactions screened, step 3 equals step 1");
      steps.screened.mode = config.mode;
      model.terms = steps.step1_terms;
      model.fit = steps.step1;
      model.lambdas = steps.step1_lambdas;
      model.cv = steps.step1_cv;
      model.best_index = best1;
      model.steps = std::move(steps);
      return model;
    }
    steps.screened = std::move(*screened);
  } else {
    steps.screened.mode = config.mode;
  }
  model.screened = steps.screened.selected;

  // Step 3 with Steps 2 and 3 cross-validated together: each training fold
  // redoes Step 1 at the selected λ₁, screens its own residual, and fits its
  // own Step-3 design on the shared grid.
  model.terms = step3_terms(steps.step1_terms, steps.screened.selected);
  const lasso::TermColumns source3(data, model.terms);
  std::vector<double> grid3;
  lasso::LassoPath path3;
  {
    const auto design3 = source3.design({});
    path3 = lasso::fit_path(*design3, y, lcfg);
    grid3 = path3.lambdas;
  }

  const auto folds = lasso::make_folds(data.n(), config.folds, config.seed);
  const std::span<const double> grid1 = steps.step1_lambdas;
  const auto evaluate_fold = [&](const lasso::FoldSplit& fold) {
    std::vector<screen::ScreenScore> selected;
    if (!skip) {
      const std::vector<double> y_train = gather(y, fold.train);
      const auto design1 = source1.design(fold.train);
      const lasso::LassoPath path1 = lasso::fit_path(*design1, y_train, lcfg, grid1, best1);
      const std::vector<double> fitted = lasso::predict(path1.fits.back(), source1, fold.train);
      std::vector<double> r(fold.train.size());
      for (std::size_t i = 0; i < r.size(); ++i) r[i] = y_train[i] - fitted[i];
      if (!residual_negligible(r, y_train)) {
        const Dataset train = data.subset_rows(fold.train);
        if (auto s = run_screen(train, r, config, m)) selected = std::move(s->selected);
      }
    }
    const lasso::TermColumns fold_source(data, step3_terms(steps.step1_terms, selected));
    return lasso::lasso_fold_errors(fold_source, y, fold, grid3, lcfg);
  };
  path3.cv = lasso::cv_errors(folds, grid3.size(), evaluate_fold, lcfg.threads);

  model.best_index = lasso::best_index(*path3.cv);
  model.fit = path3.fits.at(model.best_index);
  model.lambdas = std::move(path3.lambdas);
  model.cv = std::move(path3.cv);
  if (!steps.step1.converged) model.warnings.push_back("step-1 lasso did not converge at the selected lambda");
  if (!model.fit.converged) model.warnings.push_back("step-3 lasso did not converge at the selected lambda");
  model.steps = std::move(steps);
  return model;
}

namespace {

// Rough peak bytes of an APL fit: per design, the columns (materialized) or
// per-column statistics and copies of X (streamed), plus solver vectors over
// all columns. Fold designs may be alive concurrently.
double apl_footprint(const Dataset& data, const ResourceLimits& limits, std::size_t concurrent) {
  const double n = static_cast<double>(data.n());
  const double p = static_cast<double>(data.p());
  const double cols = p + p * (p + 1) / 2;
  const double dense = n * cols * 8;
  const double design = dense <= static_cast<double>(limits.materialize_budget_bytes) ? dense : cols * 16 + 16 * n * p;
  const double solver = cols * 34;
  return static_cast<double>(concurrent) * (design + solver);
}

}  // namespace

Model fit_apl(const Dataset& data, const SprinterConfig& config) {
  require_response(data);
  check_folds(data, config.folds);
  const ResourceLimits& limits = config.limits;
  if (data.p() > limits.apl_max_p) {
    throw ResourceError("apl: p=" + std::to_string(data.p()) + " exceeds the all-pairs limit of " +
                        std::to_string(limits.apl_max_p));
  }
  const lasso::LassoConfig lcfg = lasso_config(config);
  const std::size_t concurrent = std::min(resolve_threads(lcfg.threads), config.folds);
  const double need = apl_footprint(data, limits, concurrent);
  if (need > static_cast<double>(limits.memory_budget_bytes)) {
    throw ResourceError("apl: estimated footprint " + std::to_string(static_cast<long long>(need / (1 << 20))) +
                        " MiB exceeds the memory budget of " +
                        std::to_string(limits.memory_budget_bytes >> 20) + " MiB");
  }
  const lasso::AllPairsColumns source(data, limits.materialize_budget_bytes, config.threads);
  lasso::CvResult cv = lasso::cross_validate(source, data.y(), config.folds, config.seed, lcfg);
  std::vector<Term> terms;
  terms.reserve(source.cols());
  for (std::size_t c = 0; c < source.cols(); ++c) terms.push_back(source.term(c));
  return from_cv(Method::apl, data, std::move(terms), std::move(cv), config.seed);
}

Model fit_mel(const Dataset& data, const SprinterConfig& config) {
  require_response(data);
  check_folds(data, config.folds);
  std::vector<Term> terms = main_terms(data.p(), false);
  const lasso::TermColumns source(data, terms);
  lasso::CvResult cv = lasso::cross_validate(source, data.y(), config.folds, config.seed, lasso_config(config));
  return from_cv(Method::mel, data, std::move(terms), std::move(cv), config.seed);
}

Model fit_sis_lasso(const Dataset& data, std::size_t m, const SprinterConfig& config) {
  require_response(data);
  check_folds(data, config.folds);
  if (m == 0) throw ConfigError("sis: m must be at least 1");
  const std::size_t p = data.p();
  const TauMap tau(p);
  const std::span<const double> y = data.y();

  // Candidates carry their all-pairs column index in `ell` so that mains and
  // pairs share one tie-break order.
  std::vector<screen::ScreenScore> candidates;
  for (std::size_t j = 0; j < p; ++j) {
    const ColumnStats& s = data.stats(j);
    if (degenerate_variance(s.sd * s.sd, s.mean)) continue;
    candidates.push_back({Term::main(j), j, std::abs(screen::residual_correlation(data.column(j), y))});
  }
  screen::ScreenOptions opts;
  opts.threads = config.threads;
  const std::size_t pair_m = static_cast<std::size_t>(std::min<std::uint64_t>(m, tau.q()));
  for (auto s : screen::screen_topm(data, y, pair_m, opts).selected) {
    s.ell += p;
    candidates.push_back(s);
  }
  std::sort(candidates.begin(), candidates.end(), screen::ranks_before);
  if (candidates.size() > m) candidates.resize(m);
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) { return a.ell < b.ell; });

  std::vector<Term> terms;
  for (const auto& c : candidates) terms.push_back(c.pair);
  if (terms.empty()) throw InputError("sis: every candidate column is constant");
  const lasso::TermColumns source(data, terms);
  lasso::CvResult cv = lasso::cross_validate(source, y, config.folds, config.seed, lasso_config(config));
  Model model = from_cv(Method::sis, data, std::move(terms), std::move(cv), config.seed);
  model.screened = std::move(candidates);
  return model;
}

Model fit_oracle_ls(const Dataset& data, const std::vector<Term>& support) {
  require_response(data);
  const std::size_t n = data.n();
  const std::size_t s = support.size();
  if (s >= n) {
    throw ConfigError("oracle_ls: support of size " + std::to_string(s) + " needs more than " + std::to_string(n) +
                      " rows");
  }
  const lasso::TermColumns source(data, support);
  Eigen::MatrixXd a(n, s + 1);
  a.col(0).setOnes();
  std::vector<double> col(n);
  for (std::size_t c = 0; c < s; ++c) {
    source.column(c, {}, col);
    a.col(static_cast<Eigen::Index>(c + 1)) = Eigen::Map<const Eigen::VectorXd>(col.data(), static_cast<Eigen::Index>(n));
  }
  const Eigen::Map<const Eigen::VectorXd> y(data.y().data(), static_cast<Eigen::Index>(n));
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(a);
  const Eigen::VectorXd coef = cod.solve(y);

  Model model;
  model.method = Method::oracle_ls;
  model.p = data.p();
  model.terms = support;
  model.fit.intercept = coef[0];
  model.fit.converged = true;
  for (std::size_t c = 0; c < s; ++c) {
    const double b = coef[static_cast<Eigen::Index>(c + 1)];
    if (b != 0.0) model.fit.coefficients.emplace_back(c, b);
  }
  if (static_cast<std::size_t>(cod.rank()) < s + 1) {
    model.warnings.push_back("oracle_ls: design is rank deficient (rank " + std::to_string(cod.rank()) + " of " +
                             std::to_string(s + 1) + "); minimum-norm solution used");
  }
  return model;
}

Model fit(Method method, const Dataset& data, const SprinterConfig& config, const std::vector<Term>& support,
          std::optional<std::size_t> sis_m) {
  switch (method) {
    case Method::sprinter: return fit_sprinter(data, config);
    case Method::apl: return fit_apl(data, config);
    case Method::mel: return fit_mel(data, config);
    case Method::sis: return fit_sis_lasso(data, sis_m.value_or(data.n()), config);
    case Method::oracle_ls: return fit_oracle_ls(data, support);
  }
  throw ConfigError("unknown method");
}

std::vector<double> Model::predict(const Dataset& data) const {
  if (data.p() != p) {
    throw SchemaError("predict: model expects " + std::to_string(p) + " feature columns, input has " +
                      std::to_string(data.p()));
  }
  return lasso::predict(fit, data, terms);
}

std::vector<std::pair<Term, double>> Model::coefficients() const {
  std::vector<std::pair<Term, double>> out;
  for (const auto& [c, b] : fit.coefficients) out.emplace_back(terms.at(c), b);
  return out;
}

Evaluation evaluate_predictions(std::span<const double> y, std::span<const double> y_hat) {
  if (y.size() != y_hat.size()) throw SchemaError("evaluate: prediction and response lengths differ");
  if (y.empty()) throw InputError("evaluate: empty test set");
  double sse = 0.0;
  double norm = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = y[i] - y_hat[i];
    sse += e * e;
    norm += y[i] * y[i];
  }
  Evaluation out;
  out.mse = sse / static_cast<double>(y.size());
  if (norm > 0.0) out.r_squared_normalized = sse / norm;
  return out;
}

Evaluation evaluate(const Model& model, const Dataset& test) {
  if (!test.has_response()) throw InputError("evaluate: test data has no response");
  const std::vector<double> y_hat = model.predict(test);
  return evaluate_predictions(test.y(), y_hat);
}

}  // namespace sprinter::pipeline
