#include "sprinter/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "sprinter/lasso.hpp"
#include "sprinter/parallel.hpp"
#include "sprinter/simgen.hpp"

namespace sprinter::oracle {

namespace {

void check_unit_diagonal(const Eigen::MatrixXd& sigma) {
  if (sigma.rows() != sigma.cols() || sigma.rows() == 0) throw ConfigError("oracle: Sigma must be square");
  for (Eigen::Index i = 0; i < sigma.rows(); ++i) {
    if (std::abs(sigma(i, i) - 1.0) > 1e-12) throw ConfigError("oracle: Sigma must have unit diagonal");
  }
}

void check_pair(const Eigen::MatrixXd& sigma, Pair jk) {
  const auto p = static_cast<std::size_t>(sigma.rows());
  if (jk.first >= p || jk.second >= p) throw IndexError("oracle: pair index out of range");
}

double rho(const Eigen::MatrixXd& s, std::size_t a, std::size_t b) {
  return s(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
}

void check_probability(double v) {
  if (!(v > 0.0 && v < 1.0)) throw ConfigError("oracle: Bernoulli probabilities must lie strictly in (0, 1)");
}

}  // namespace

Eigen::MatrixXd ar_correlation(std::size_t p, double r) {
  Eigen::MatrixXd s(p, p);
  for (std::size_t j = 0; j < p; ++j) {
    for (std::size_t k = 0; k < p; ++k) {
      s(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
          std::pow(r, static_cast<double>(j > k ? j - k : k - j));
    }
  }
  return s;
}

double gaussian_interaction_cov(const Eigen::MatrixXd& sigma, Pair jk, Pair ts) {
  check_unit_diagonal(sigma);
  check_pair(sigma, jk);
  check_pair(sigma, ts);
  const auto [j, k] = jk;
  const auto [t, s] = ts;
  return rho(sigma, j, t) * rho(sigma, k, s) + rho(sigma, j, s) * rho(sigma, k, t);
}

double gaussian_interaction_var(const Eigen::MatrixXd& sigma, Pair jk) {
  check_unit_diagonal(sigma);
  check_pair(sigma, jk);
  if (jk.first == jk.second) return 2.0;
  const double r = rho(sigma, jk.first, jk.second);
  return 1.0 + r * r;
}

double gaussian_interaction_second_moment(const Eigen::MatrixXd& sigma, Pair jk) {
  check_unit_diagonal(sigma);
  check_pair(sigma, jk);
  const double r = rho(sigma, jk.first, jk.second);
  return 1.0 + 2.0 * r * r;
}

Eigen::MatrixXd gaussian_interaction_covariance(const Eigen::MatrixXd& sigma, const std::vector<Pair>& pairs) {
  check_unit_diagonal(sigma);
  const auto l = static_cast<Eigen::Index>(pairs.size());
  Eigen::MatrixXd out(l, l);
  for (Eigen::Index a = 0; a < l; ++a) {
    for (Eigen::Index b = a; b < l; ++b) {
      const auto [j, k] = pairs[static_cast<std::size_t>(a)];
      const auto [t, s] = pairs[static_cast<std::size_t>(b)];
      out(a, b) = out(b, a) = rho(sigma, j, t) * rho(sigma, k, s) + rho(sigma, j, s) * rho(sigma, k, t);
    }
  }
  return out;
}

double MonteCarloCheck::relative_error() const noexcept {
  return analytic != 0.0 ? std::abs(estimate - analytic) / std::abs(analytic) : std::abs(estimate);
}

std::vector<MonteCarloCheck> gaussian_moment_checks(double r, std::size_t n, std::uint64_t seed) {
  const Dataset x = simgen::gen_gaussian_ar(n, 3, r, seed);
  const Eigen::MatrixXd sigma = ar_correlation(3, r);
  const auto z01 = interaction_column(x, 0, 1);
  const auto z02 = interaction_column(x, 0, 2);
  const auto z12 = interaction_column(x, 1, 2);
  auto mean = [](const std::vector<double>& v) {
    double s = 0.0;
    for (double e : v) s += e;
    return s / static_cast<double>(v.size());
  };
  auto cov = [&](const std::vector<double>& a, const std::vector<double>& b) {
    const double ma = mean(a);
    const double mb = mean(b);
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - ma) * (b[i] - mb);
    return s / static_cast<double>(a.size());
  };
  double second = 0.0;
  for (double v : z01) second += v * v;
  second /= static_cast<double>(n);

  return {
      {"E[Z(0,1)^2]", gaussian_interaction_second_moment(sigma, {0, 1}), second},
      {"Var[Z(0,1)]", gaussian_interaction_var(sigma, {0, 1}), cov(z01, z01)},
      {"Var[Z(0,2)]", gaussian_interaction_var(sigma, {0, 2}), cov(z02, z02)},
      {"Cov[Z(0,1),Z(0,2)]", gaussian_interaction_cov(sigma, {0, 1}, {0, 2}), cov(z01, z02)},
      {"Cov[Z(0,1),Z(1,2)]", gaussian_interaction_cov(sigma, {0, 1}, {1, 2}), cov(z01, z12)},
  };
}

BernoulliSignal bernoulli_screening_signal(double p1, double p2, double gamma) {
  check_probability(p1);
  check_probability(p2);
  const double pp = p1 * p2;
  BernoulliSignal out;
  out.psi = pp * (1.0 - pp);
  out.cov_zw = pp * (1.0 + pp - p1 - p2);
  out.omega = out.cov_zw / std::sqrt(out.psi) * gamma;
  out.eta = 2.0 / 3.0 * std::abs(1.0 + pp - p1 - p2) / (1.0 - pp) * std::abs(gamma);
  out.eta_from_omega = 2.0 / 3.0 * std::abs(out.omega);
  return out;
}

BernoulliSignal bernoulli_enumerate(double p1, double p2, double gamma) {
  check_probability(p1);
  check_probability(p2);
  double ez = 0.0, ez2 = 0.0, ew = 0.0, ezw = 0.0;
  for (int a = 0; a <= 1; ++a) {
    for (int b = 0; b <= 1; ++b) {
      const double prob = (a ? p1 : 1.0 - p1) * (b ? p2 : 1.0 - p2);
      const double z = static_cast<double>(a * b);
      const double w = z - (p2 * a + p1 * b);
      ez += prob * z;
      ez2 += prob * z * z;
      ew += prob * w;
      ezw += prob * z * w;
    }
  }
  BernoulliSignal out;
  out.psi = ez2 - ez * ez;
  out.cov_zw = ezw - ez * ew;
  out.omega = out.cov_zw / std::sqrt(out.psi) * gamma;
  out.eta = 2.0 / 3.0 * std::abs(out.cov_zw / out.psi) * std::abs(gamma);
  out.eta_from_omega = 2.0 / 3.0 * std::abs(out.omega);
  return out;
}

PopulationMoments bernoulli_moments(const std::vector<double>& probs, const std::vector<Pair>& pairs) {
  for (double v : probs) check_probability(v);
  const auto p = static_cast<Eigen::Index>(probs.size());
  const auto l = static_cast<Eigen::Index>(pairs.size());
  for (auto [j, k] : pairs) {
    if (j >= probs.size() || k >= probs.size()) throw IndexError("oracle: pair index out of range");
  }
  // Moments of products of independent indicators: E[∏_{i∈S} X_i] = ∏_{i∈S} p_i
  // over the distinct indices S.
  auto expect = [&](std::vector<std::size_t> idx) {
    std::sort(idx.begin(), idx.end());
    idx.erase(std::unique(idx.begin(), idx.end()), idx.end());
    double e = 1.0;
    for (std::size_t i : idx) e *= probs[i];
    return e;
  };
  PopulationMoments out;
  out.sigma = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) out.sigma(j, j) = probs[j] * (1.0 - probs[j]);
  out.phi.resize(p, l);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index a = 0; a < l; ++a) {
      const auto [t, s] = pairs[a];
      const auto jj = static_cast<std::size_t>(j);
      out.phi(j, a) = expect({jj, t, s}) - expect({jj}) * expect({t, s});
    }
  }
  out.psi.resize(l, l);
  for (Eigen::Index a = 0; a < l; ++a) {
    for (Eigen::Index b = 0; b < l; ++b) {
      const auto [j, k] = pairs[a];
      const auto [t, s] = pairs[b];
      out.psi(a, b) = expect({j, k, t, s}) - expect({j, k}) * expect({t, s});
    }
  }
  return out;
}

PopulationMoments gaussian_moments(const Eigen::MatrixXd& sigma, const std::vector<Pair>& pairs) {
  check_unit_diagonal(sigma);
  for (auto jk : pairs) check_pair(sigma, jk);
  PopulationMoments out;
  out.sigma = sigma;
  out.phi = Eigen::MatrixXd::Zero(sigma.rows(), static_cast<Eigen::Index>(pairs.size()));
  out.psi = gaussian_interaction_covariance(sigma, pairs);
  return out;
}

Decomposition pure_interaction_decompose(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& phi,
                                         const Eigen::MatrixXd& psi, const Eigen::VectorXd& gamma) {
  if (sigma.rows() != sigma.cols() || phi.rows() != sigma.rows() || psi.rows() != phi.cols() ||
      psi.cols() != phi.cols() || gamma.size() != phi.cols()) {
    throw ConfigError("oracle: inconsistent Sigma, Phi, Psi, gamma dimensions");
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(sigma);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  const double smin = sv.size() ? sv(sv.size() - 1) : 0.0;
  const double condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
  if (!(condition < 1e12)) {
    throw NumericError("oracle: Sigma is singular (condition number " + std::to_string(condition) + ")");
  }
  Decomposition out;
  out.condition = condition;
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(sigma);
  out.projection = lu.solve(phi);
  out.theta_shift = out.projection * gamma;
  out.omega = psi - phi.transpose() * out.projection;
  out.cov_x_w = (phi.transpose() - out.projection.transpose() * sigma).cwiseAbs().maxCoeff();
  return out;
}

// ---------------------------------------------------------------------------

std::string_view distribution_name(MomentDistribution d) noexcept {
  switch (d) {
    case MomentDistribution::gaussian: return "gaussian";
    case MomentDistribution::product2: return "product2";
    case MomentDistribution::product3: return "product3";
    case MomentDistribution::product4: return "product4";
  }
  return "unknown";
}

MomentDistribution parse_distribution(std::string_view name) {
  for (auto d : {MomentDistribution::gaussian, MomentDistribution::product2, MomentDistribution::product3,
                 MomentDistribution::product4}) {
    if (distribution_name(d) == name) return d;
  }
  throw ConfigError("unknown distribution '" + std::string(name) + "'");
}

namespace {

int factors(MomentDistribution d) noexcept {
  switch (d) {
    case MomentDistribution::gaussian: return 1;
    case MomentDistribution::product2: return 2;
    case MomentDistribution::product3: return 3;
    case MomentDistribution::product4: return 4;
  }
  return 1;
}

}  // namespace

double distribution_nu(MomentDistribution d) noexcept { return 2.0 / factors(d); }

double distribution_norm(MomentDistribution d) noexcept {
  return std::pow(std::sqrt(8.0 / 3.0), factors(d));
}

double gaussian_psi2_norm_numeric() {
  constexpr double kBound = 60.0;
  constexpr int kPanels = 40000;
  const double h = 2.0 * kBound / kPanels;
  const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::acos(-1.0));
  auto orlicz = [&](double zeta) {  // E exp(U²/ζ²)
    const double a = 0.5 - 1.0 / (zeta * zeta);
    double s = 0.0;
    for (int i = 0; i <= kPanels; ++i) {
      const double u = -kBound + h * i;
      const double w = (i == 0 || i == kPanels) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      s += w * std::exp(-a * u * u);
    }
    return s * h / 3.0 * inv_sqrt_2pi;
  };
  // E exp(U²/ζ²) is finite for ζ > √2 and decreasing in ζ.
  double lo = std::sqrt(2.0) + 1e-3;
  double hi = 10.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    (orlicz(mid) > 2.0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double moment_bound_rhs(double norm, double nu, int k) {
  const double kn = static_cast<double>(k) / nu;
  return 2.0 * std::pow(norm, k) * kn * std::tgamma(kn);
}

MomentCheck moment_bound_check(MomentDistribution d, int k, std::size_t mc_n, std::uint64_t seed) {
  if (k < 1) throw ConfigError("moment check: k must be at least 1");
  if (mc_n < 2) throw ConfigError("moment check: need at least 2 Monte-Carlo draws");
  MomentCheck out;
  out.distribution = d;
  out.nu = distribution_nu(d);
  out.k = k;
  out.norm = distribution_norm(d);
  out.rhs = moment_bound_rhs(out.norm, out.nu, k);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  const int m = factors(d);
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < mc_n; ++i) {
    double u = 1.0;
    for (int f = 0; f < m; ++f) u *= normal(rng);
    const double v = std::pow(std::abs(u), k);
    const double delta = v - mean;
    mean += delta / static_cast<double>(i + 1);
    m2 += delta * (v - mean);
  }
  out.lhs = mean;
  out.se = std::sqrt(m2 / static_cast<double>(mc_n - 1) / static_cast<double>(mc_n));
  out.holds = out.lhs <= out.rhs + 3.0 * out.se;
  return out;
}

// ---------------------------------------------------------------------------

double gaussian_omega(const RecoveryScenario& s) {
  const double r = std::pow(s.rho, static_cast<double>(s.pair.second - s.pair.first));
  return std::sqrt(1.0 + r * r) * std::abs(s.gamma);
}

double default_eta(const RecoveryScenario& s) { return 2.0 / 3.0 * gaussian_omega(s); }

double selection_budget(const RecoveryScenario& s, double eta) {
  if (!(eta > 0.0)) return std::numeric_limits<double>::infinity();
  const Eigen::MatrixXd sigma = ar_correlation(s.p, s.rho);
  std::vector<Pair> pairs;
  for (std::size_t j = 0; j < s.p; ++j) {
    for (std::size_t k = j; k < s.p; ++k) pairs.emplace_back(j, k);
  }
  Eigen::MatrixXd c = gaussian_interaction_covariance(sigma, pairs);
  const Eigen::VectorXd d = c.diagonal().cwiseSqrt().cwiseInverse();
  c = d.asDiagonal() * c * d.asDiagonal();
  // Power iteration; the matrix is positive semidefinite with a dominant
  // eigenvalue well separated for AR correlations.
  Eigen::VectorXd v = Eigen::VectorXd::Ones(c.rows()).normalized();
  double lambda = 0.0;
  for (int it = 0; it < 1000; ++it) {
    Eigen::VectorXd w = c * v;
    const double next = v.dot(w);
    v = w.normalized();
    if (std::abs(next - lambda) <= 1e-12 * std::abs(next)) {
      lambda = next;
      break;
    }
    lambda = next;
  }
  const double r = std::pow(s.rho, static_cast<double>(s.pair.second - s.pair.first));
  const double var_w = s.gamma * s.gamma * (s.pair.first == s.pair.second ? 2.0 : 1.0 + r * r);
  return 4.0 / (eta * eta) * lambda * var_w;
}

double RecoveryRow::frequency() const noexcept {
  return reps ? static_cast<double>(recovered) / static_cast<double>(reps) : 0.0;
}

double RecoveryRow::se() const noexcept {
  if (reps == 0) return 0.0;
  const double f = frequency();
  return std::sqrt(f * (1.0 - f) / static_cast<double>(reps));
}

std::vector<RecoveryRow> screening_recovery_experiment(const RecoveryScenario& s, const std::vector<std::size_t>& n_grid,
                                                       std::size_t reps, std::uint64_t seed) {
  if (s.pair.first >= s.p || s.pair.second >= s.p) throw ConfigError("recovery: pair out of range");
  const double eta = s.eta.value_or(default_eta(s));
  const double budget = selection_budget(s, eta);
  const TauMap tau(s.p);
  const std::uint64_t target = tau(s.pair.first, s.pair.second);

  std::vector<RecoveryRow> rows;
  for (std::size_t n : n_grid) {
    struct Outcome {
      bool recovered = false;
      std::size_t selected = 0;
    };
    std::vector<Outcome> outcomes(reps);
    parallel_for(reps, resolve_threads(s.threads), [&](std::size_t r) {
      const std::uint64_t rep_seed = seed * 0x9E3779B97F4A7C15ULL + n * 1000003ULL + r;
      const Dataset x = simgen::gen_gaussian_ar(n, s.p, s.rho, rep_seed);
      const std::vector<double> e = simgen::noise(n, rep_seed);
      std::vector<double> y(n);
      const auto xa = x.column(s.pair.first);
      const auto xb = x.column(s.pair.second);
      for (std::size_t i = 0; i < n; ++i) y[i] = s.gamma * xa[i] * xb[i] + s.sigma * e[i];
      for (auto [j, b] : s.mains) {
        const auto xj = x.column(j);
        for (std::size_t i = 0; i < n; ++i) y[i] += b * xj[i];
      }
      const lasso::TermColumns source(x, main_terms(s.p, s.include_squares));
      lasso::LassoConfig cfg;
      cfg.threads = 1;
      const auto cv = lasso::cross_validate(source, y, s.folds, rep_seed, cfg);
      const std::vector<double> fitted = lasso::predict(cv.best_fit(), source);
      std::vector<double> resid(n);
      for (std::size_t i = 0; i < n; ++i) resid[i] = y[i] - fitted[i];
      screen::ScreenOptions opts;
      opts.threads = 1;
      screen::ScreenResult result;
      try {
        result = s.mode == screen::Mode::threshold ? screen::screen_threshold(x, resid, eta, opts)
                                                   : screen::screen_topm(x, resid, s.m, opts);
      } catch (const DegenerateResidualError&) {
        return;
      }
      outcomes[r].selected = result.selected.size();
      outcomes[r].recovered = std::any_of(result.selected.begin(), result.selected.end(),
                                          [&](const screen::ScreenScore& sc) { return sc.ell == target; });
    });
    RecoveryRow row;
    row.n = n;
    row.reps = reps;
    row.budget = budget;
    double total = 0.0;
    for (const auto& o : outcomes) {
      row.recovered += o.recovered ? 1 : 0;
      row.within_budget += static_cast<double>(o.selected) <= budget ? 1 : 0;
      total += static_cast<double>(o.selected);
    }
    row.mean_selected = reps ? total / static_cast<double>(reps) : 0.0;
    rows.push_back(row);
  }
  return rows;
}

bool nondecreasing_within_noise(const std::vector<RecoveryRow>& rows, double slack) {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double se = std::sqrt(rows[i].se() * rows[i].se() + rows[i - 1].se() * rows[i - 1].se());
    if (rows[i].frequency() < rows[i - 1].frequency() - slack * se) return false;
  }
  return true;
}

}  // namespace sprinter::oracle
