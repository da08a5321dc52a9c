#include "sprinter/simgen.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

namespace sprinter::simgen {

namespace {

// Independent streams per purpose so that, e.g., the noise for a seed does
// not depend on how many feature draws preceded it.
enum Stream : std::uint64_t { kFeatures = 1, kNoise = 2, kStructure = 3 };

std::mt19937_64 make_rng(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

std::vector<std::pair<std::size_t, std::size_t>> pairs_from_one_based(
    std::initializer_list<std::pair<std::size_t, std::size_t>> in) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (auto [a, b] : in) out.emplace_back(std::min(a, b) - 1, std::max(a, b) - 1);
  return out;
}

std::vector<std::size_t> from_one_based(std::initializer_list<std::size_t> in) {
  std::vector<std::size_t> out;
  for (std::size_t v : in) out.push_back(v - 1);
  return out;
}

}  // namespace

std::size_t tree_nodes(std::size_t depth) {
  if (depth >= 31) throw ConfigError("tree: depth " + std::to_string(depth) + " is too large");
  return (std::size_t{1} << (depth + 1)) - 1;
}

bool is_tree_ancestor(std::size_t ancestor, std::size_t node) noexcept {
  if (node == ancestor) return false;
  while (node > ancestor) node = (node - 1) / 2;
  return node == ancestor;
}

Dataset gen_binary_tree(std::size_t depth, double leaf_prob, std::size_t n, std::uint64_t seed) {
  if (!(leaf_prob > 0.0 && leaf_prob < 1.0)) throw ConfigError("tree: leaf probability must lie in (0, 1)");
  if (n == 0) throw ConfigError("tree: n must be positive");
  const std::size_t p = tree_nodes(depth);
  const std::size_t first_leaf = (std::size_t{1} << depth) - 1;
  std::vector<double> x(n * p);
  auto rng = make_rng(seed, kFeatures);
  std::bernoulli_distribution leaf(leaf_prob);
  std::vector<double> row(p);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t v = first_leaf; v < p; ++v) row[v] = leaf(rng) ? 1.0 : 0.0;
    for (std::size_t v = first_leaf; v-- > 0;) row[v] = std::max(row[2 * v + 1], row[2 * v + 2]);
    for (std::size_t v = 0; v < p; ++v) x[v * n + i] = row[v];
  }
  std::vector<std::string> names(p);
  for (std::size_t v = 0; v < p; ++v) names[v] = "node" + std::to_string(v);
  return Dataset(n, p, std::move(x), {}, std::move(names));
}

Dataset gen_gaussian_ar(std::size_t n, std::size_t p, double rho, std::uint64_t seed) {
  if (!(std::abs(rho) < 1.0)) throw ConfigError("gaussian: |rho| must be below 1");
  if (n == 0 || p == 0) throw ConfigError("gaussian: n and p must be positive");
  std::vector<double> x(n * p);
  auto rng = make_rng(seed, kFeatures);
  std::normal_distribution<double> normal;
  const double innovation = std::sqrt(1.0 - rho * rho);
  for (std::size_t i = 0; i < n; ++i) {
    double prev = normal(rng);
    x[i] = prev;
    for (std::size_t j = 1; j < p; ++j) {
      prev = rho * prev + innovation * normal(rng);
      x[j * n + i] = prev;
    }
  }
  return Dataset(n, p, std::move(x));
}

std::string_view structure_name(Structure s) noexcept {
  switch (s) {
    case Structure::mixed: return "mixed";
    case Structure::hierarchical: return "hierarchical";
    case Structure::anti_hierarchical: return "anti_hierarchical";
    case Structure::interaction_only: return "interaction_only";
    case Structure::main_only: return "main_only";
    case Structure::squared_only: return "squared_only";
  }
  return "unknown";
}

Structure parse_structure(std::string_view name) {
  for (Structure s : {Structure::mixed, Structure::hierarchical, Structure::anti_hierarchical,
                      Structure::interaction_only, Structure::main_only, Structure::squared_only}) {
    if (structure_name(s) == name) return s;
  }
  throw ConfigError("unknown structure '" + std::string(name) + "'");
}

std::vector<Term> SignalSpec::support() const {
  std::vector<Term> out;
  for (std::size_t j : t1) out.push_back(Term::main(j));
  for (std::size_t j : t2) out.push_back(Term::pair(j, j));
  for (auto [j, k] : t3) out.push_back(Term::pair(j, k));
  return out;
}

std::vector<std::pair<Term, double>> SignalSpec::coefficients() const {
  std::vector<std::pair<Term, double>> out;
  for (const Term& t : support()) out.emplace_back(t, t.is_main() ? beta_value : gamma_value);
  return out;
}

SignalSpec structure(Structure s, std::size_t p) {
  if (p < 20) throw ConfigError("structure '" + std::string(structure_name(s)) + "' needs p >= 20, got " + std::to_string(p));
  SignalSpec spec;
  spec.name = std::string(structure_name(s));
  const auto first_six = from_one_based({1, 2, 3, 4, 5, 6});
  const auto hier_pairs = pairs_from_one_based({{1, 3}, {2, 4}, {3, 4}, {1, 8}, {2, 8}, {5, 10}});
  switch (s) {
    case Structure::mixed:
      spec.t1 = first_six;
      spec.t2 = from_one_based({1, 5, 15});
      spec.t3 = pairs_from_one_based({{1, 5}, {4, 18}, {10, 11}, {9, 17}, {1, 13}, {4, 17}});
      break;
    case Structure::hierarchical:
      spec.t1 = first_six;
      spec.t2 = from_one_based({1, 2, 3});
      spec.t3 = hier_pairs;
      break;
    case Structure::anti_hierarchical:
      spec.t1 = first_six;
      spec.t2 = from_one_based({11, 12, 13});
      spec.t3 = pairs_from_one_based({{11, 13}, {12, 14}, {13, 14}, {11, 18}, {12, 18}, {15, 20}});
      break;
    case Structure::interaction_only:
      spec.t3 = hier_pairs;
      break;
    case Structure::main_only:
      spec.t1 = first_six;
      break;
    case Structure::squared_only:
      spec.t2 = first_six;
      break;
  }
  return spec;
}

std::string_view mir_preset_name(MirPreset m) noexcept {
  switch (m) {
    case MirPreset::large: return "large";
    case MirPreset::medium: return "medium";
    case MirPreset::small: return "small";
  }
  return "unknown";
}

MirPreset parse_mir_preset(std::string_view name) {
  for (MirPreset m : {MirPreset::large, MirPreset::medium, MirPreset::small}) {
    if (mir_preset_name(m) == name) return m;
  }
  throw ConfigError("unknown MIR preset '" + std::string(name) + "' (expected large, medium or small)");
}

double ancestor_fraction(MirPreset m) noexcept {
  switch (m) {
    case MirPreset::large: return 0.9;
    case MirPreset::medium: return 0.5;
    case MirPreset::small: return 0.1;
  }
  return 0.5;
}

SignalSpec tree_structure(std::size_t depth, MirPreset preset, std::uint64_t seed, std::size_t mains,
                          std::size_t pairs) {
  if (depth < 2) throw ConfigError("tree structure: depth must be at least 2");
  const std::size_t p = tree_nodes(depth);
  if (mains > p) throw ConfigError("tree structure: more main effects than nodes");
  auto rng = make_rng(seed, kStructure);
  auto uniform = [&](std::size_t lo, std::size_t hi) {  // inclusive
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };

  SignalSpec spec;
  spec.name = "tree_" + std::string(mir_preset_name(preset));
  std::vector<std::size_t> nodes(p);
  for (std::size_t v = 0; v < p; ++v) nodes[v] = v;
  std::shuffle(nodes.begin(), nodes.end(), rng);
  spec.t1.assign(nodes.begin(), nodes.begin() + static_cast<std::ptrdiff_t>(mains));
  std::sort(spec.t1.begin(), spec.t1.end());

  const auto nested = static_cast<std::size_t>(std::lround(ancestor_fraction(preset) * static_cast<double>(pairs)));
  auto known = [&](std::size_t a, std::size_t b) {
    return std::find(spec.t3.begin(), spec.t3.end(), std::pair{a, b}) != spec.t3.end();
  };
  std::size_t attempts = 0;
  while (spec.t3.size() < pairs) {
    if (++attempts > 100000) throw ConfigError("tree structure: cannot place the requested interactions");
    const bool want_nested = spec.t3.size() < nested;
    std::size_t a = 0;
    std::size_t b = 0;
    if (want_nested) {
      b = uniform(1, p - 1);
      std::size_t up = uniform(1, depth);  // levels above b, clipped at the root
      a = b;
      while (up-- > 0 && a > 0) a = (a - 1) / 2;
    } else {
      a = uniform(0, p - 1);
      b = uniform(0, p - 1);
      if (a == b || is_tree_ancestor(a, b) || is_tree_ancestor(b, a)) continue;
    }
    if (a > b) std::swap(a, b);
    if (a == b || known(a, b)) continue;
    spec.t3.emplace_back(a, b);
  }
  return spec;
}

std::string_view snr_convention_name(SnrConvention c) noexcept {
  return c == SnrConvention::squared ? "squared" : "root";
}

SnrConvention parse_snr_convention(std::string_view name) {
  if (name == "squared") return SnrConvention::squared;
  if (name == "root") return SnrConvention::root;
  throw ConfigError("unknown SNR convention '" + std::string(name) + "' (expected squared or root)");
}

double noise_sigma(std::span<const double> signal, double snr, SnrConvention convention) {
  if (!(snr > 0.0) || !std::isfinite(snr)) throw ConfigError("snr must be positive and finite");
  double ss = 0.0;
  for (double v : signal) ss += v * v;
  if (!(ss > 0.0)) throw ConfigError("signal is identically zero; SNR cannot be calibrated");
  const double n = static_cast<double>(signal.size());
  return convention == SnrConvention::squared ? std::sqrt(ss / (n * snr)) : std::sqrt(ss / n) / snr;
}

std::vector<double> signal(const Dataset& data, const SignalSpec& spec) {
  const std::size_t n = data.n();
  std::vector<double> s(n, 0.0);
  for (const auto& [t, coef] : spec.coefficients()) {
    if (t.j >= data.p() || (t.is_pair() && t.k >= data.p())) {
      throw ConfigError("signal: term " + to_string(t) + " out of range for p=" + std::to_string(data.p()));
    }
    const auto xj = data.column(t.j);
    if (t.is_main()) {
      for (std::size_t i = 0; i < n; ++i) s[i] += coef * xj[i];
    } else {
      const auto xk = data.column(t.k);
      for (std::size_t i = 0; i < n; ++i) s[i] += coef * (xj[i] * xk[i]);
    }
  }
  return s;
}

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  auto rng = make_rng(seed, kNoise);
  std::normal_distribution<double> normal;
  std::vector<double> e(n);
  for (double& v : e) v = normal(rng);
  return e;
}

SimulatedData make_response(const Dataset& features, const SignalSpec& spec, double snr, SnrConvention convention,
                            std::uint64_t seed) {
  SimulatedData out;
  out.spec = spec;
  out.signal = signal(features, spec);
  out.sigma = noise_sigma(out.signal, snr, convention);
  out.snr = snr;
  out.convention = convention;
  out.seed = seed;
  const std::vector<double> e = noise(features.n(), seed);
  std::vector<double> y(features.n());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = out.signal[i] + out.sigma * e[i];
  out.data = features.with_response(std::move(y));
  return out;
}

Dataset respond_with_sigma(const Dataset& features, const SignalSpec& spec, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw ConfigError("respond_with_sigma: sigma must be finite and >= 0");
  const std::vector<double> s = signal(features, spec);
  const std::vector<double> e = noise(features.n(), seed);
  std::vector<double> y(features.n());
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = s[i] + sigma * e[i];
  return features.with_response(std::move(y));
}

std::pair<double, double> mir_parts(const Dataset& features, const SignalSpec& spec) {
  const std::size_t n = features.n();
  const std::size_t p = features.p();
  SignalSpec mains_only = spec;
  mains_only.t2.clear();
  mains_only.t3.clear();
  SignalSpec interactions = spec;
  interactions.t1.clear();

  auto centered_norm2 = [](Eigen::VectorXd v) {
    v.array() -= v.mean();
    return v.squaredNorm();
  };

  const std::vector<double> main_signal = signal(features, mains_only);
  const double numerator =
      centered_norm2(Eigen::Map<const Eigen::VectorXd>(main_signal.data(), static_cast<Eigen::Index>(n)));
  if (!interactions.has_interactions()) return {numerator, 0.0};

  const std::vector<double> zs = signal(features, interactions);
  Eigen::VectorXd z = Eigen::Map<const Eigen::VectorXd>(zs.data(), static_cast<Eigen::Index>(n));
  z.array() -= z.mean();
  Eigen::MatrixXd x(n, p);
  for (std::size_t j = 0; j < p; ++j) {
    const auto col = features.column(j);
    Eigen::VectorXd v = Eigen::Map<const Eigen::VectorXd>(col.data(), static_cast<Eigen::Index>(n));
    v.array() -= v.mean();
    x.col(static_cast<Eigen::Index>(j)) = v;
  }
  const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(x);
  const Eigen::VectorXd w = z - x * cod.solve(z);
  return {numerator, w.squaredNorm()};
}

double mir(const Dataset& features, const SignalSpec& spec) {
  if (!spec.has_interactions()) return std::numeric_limits<double>::infinity();
  const auto [num, den] = mir_parts(features, spec);
  if (!(den > 0.0)) return std::numeric_limits<double>::infinity();
  return num / den;
}

}  // namespace sprinter::simgen
