#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sprinter/core.hpp"

namespace sprinter::simgen {

/// Features of a complete binary tree of the given depth, p = 2^(depth+1) - 1
/// nodes in heap order (node 0 is the root, children of v are 2v+1 and 2v+2).
/// Leaves are independent Bernoulli(leaf_prob); every internal node is the
/// maximum of the leaves in its subtree.
Dataset gen_binary_tree(std::size_t depth, double leaf_prob, std::size_t n, std::uint64_t seed);

/// Gaussian features with Cov(X_j, X_k) = rho^|j-k| via the AR(1) recursion.
Dataset gen_gaussian_ar(std::size_t n, std::size_t p, double rho, std::uint64_t seed);

std::size_t tree_nodes(std::size_t depth);
/// Strict: a node is not its own ancestor.
bool is_tree_ancestor(std::size_t ancestor, std::size_t node) noexcept;

enum class Structure { mixed, hierarchical, anti_hierarchical, interaction_only, main_only, squared_only };

std::string_view structure_name(Structure s) noexcept;
Structure parse_structure(std::string_view name);

struct SignalSpec {
  std::string name;
  std::vector<std::size_t> t1;                             // main effects
  std::vector<std::size_t> t2;                             // squared effects
  std::vector<std::pair<std::size_t, std::size_t>> t3;     // interactions, j < k
  double beta_value = 2.0;
  double gamma_value = 3.0;

  /// Terms with nonzero true coefficients: mains, then squares, then pairs.
  std::vector<Term> support() const;
  std::vector<std::pair<Term, double>> coefficients() const;
  bool has_interactions() const noexcept { return !t2.empty() || !t3.empty(); }
};

/// The six Gaussian-design signal structures (0-based indices). Needs p >= 20.
SignalSpec structure(Structure s, std::size_t p);

enum class MirPreset { large, medium, small };

std::string_view mir_preset_name(MirPreset m) noexcept;
MirPreset parse_mir_preset(std::string_view name);
/// Fraction of interaction pairs drawn as ancestor-descendant: 0.9 / 0.5 / 0.1.
double ancestor_fraction(MirPreset m) noexcept;

/// Seeded tree signal: `mains` random main effects and `pairs` interactions of
/// which round(ancestor_fraction · pairs) are ancestor-descendant and the rest
/// are pairs of unrelated nodes. Needs depth >= 2.
SignalSpec tree_structure(std::size_t depth, MirPreset preset, std::uint64_t seed, std::size_t mains = 6,
                          std::size_t pairs = 6);

enum class SnrConvention { squared, root };

std::string_view snr_convention_name(SnrConvention c) noexcept;
SnrConvention parse_snr_convention(std::string_view name);

/// Noise scale for which the SNR identity holds on the realized signal:
/// squared: ‖s‖² / (n σ²) = snr; root: sqrt(‖s‖² / (n σ²)) = snr.
double noise_sigma(std::span<const double> signal, double snr, SnrConvention convention);

struct SimulatedData {
  Dataset data;  // features and response
  SignalSpec spec;
  std::vector<double> signal;
  double sigma = 0.0;
  double snr = 0.0;
  SnrConvention convention = SnrConvention::squared;
  std::uint64_t seed = 0;
  std::optional<double> mir;
};

/// s = Σ β x_j + Σ γ x_j² + Σ γ x_j x_k over the spec's index sets.
std::vector<double> signal(const Dataset& data, const SignalSpec& spec);

/// Standard normal noise draws used by make_response for this seed.
std::vector<double> noise(std::size_t n, std::uint64_t seed);

/// y = s + σ ε with σ from noise_sigma. Throws ConfigError on zero signal.
SimulatedData make_response(const Dataset& features, const SignalSpec& spec, double snr, SnrConvention convention,
                            std::uint64_t seed);

/// y = s + sigma ε at a fixed noise scale, e.g. a test set for an existing
/// simulation.
Dataset respond_with_sigma(const Dataset& features, const SignalSpec& spec, double sigma, std::uint64_t seed);

/// Main-effect-interaction ratio ‖X_c β‖² / ‖W γ‖², with W γ the residual of
/// the centered interaction signal regressed on the centered main effects by
/// least squares. +inf when the spec has no interactions or Wγ vanishes.
/// Meaningful when n > p.
double mir(const Dataset& features, const SignalSpec& spec);

/// Squared norms behind mir(): {numerator, denominator}.
std::pair<double, double> mir_parts(const Dataset& features, const SignalSpec& spec);

}  // namespace sprinter::simgen
