#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "manifest.hpp"

// Option structs hold every flag of a subcommand. After resolve() fills in
// derived defaults they are written verbatim into the run manifest, and
// replay rebuilds them from there.

namespace sprinter::cli {

struct DataOptions {
  std::string data;               // combined file
  std::string x;                  // features only
  std::string y;                  // single response column
  std::string response_col = "y";  // header name or 0-based index
  std::string delimiter = "auto";  // auto, comma, tab, or one character
};

struct SimulateOptions {
  std::string design = "gaussian";
  std::size_t n = 100;
  std::size_t p = 400;  // gaussian only; the tree sets p from depth
  std::size_t depth = 5;
  double leaf_prob = 0.1;
  double rho = 0.5;
  std::string structure = "mixed";  // gaussian
  std::string mir = "medium";       // tree
  std::size_t tree_mains = 6;
  std::size_t tree_pairs = 6;
  double snr = 3.0;
  std::string snr_convention;  // empty: root for gaussian, squared for tree
  std::uint64_t seed = 1;
  std::size_t test_n = 0;
  std::uint64_t test_seed = 0;  // 0: seed + 1000003
  std::string out;
  std::string truth;     // empty: <out>.truth.json
  std::string test_out;  // empty: <out>.test.csv when test_n > 0
  std::string manifest;
};

struct FitOptions {
  DataOptions input;
  std::string method = "sprinter";
  std::string m;    // integer, "n" or "n-over-log-n"; empty resolves to "n" in top-m mode
  std::string eta;  // set: threshold mode; accepts "inf"
  bool squares_step1 = true;
  std::size_t cv = 5;
  std::uint64_t seed = 1;
  std::size_t threads = 0;
  std::size_t sis_m = 0;  // 0: n
  std::string truth;      // support for oracle_ls
  std::size_t n_lambda = 100;
  double lambda_min_ratio = 0.0;  // 0: shape-dependent default
  std::size_t max_iter = 100000;
  std::string protocol = "none";
  std::string methods = "sprinter,apl,mel";  // protocol runs
  std::string out;
  std::string metrics;
  std::string manifest;
};

struct PredictOptions {
  std::string model;
  DataOptions input;
  bool no_response = false;
  std::string out;
  std::string manifest;
};

struct BenchOptions {
  std::string p_grid = "100,200,400,1000,2000";
  std::size_t n = 100;
  std::size_t test_n = 1000;
  std::size_t reps = 1;
  std::string methods = "sprinter,apl,mel";
  std::string structure = "mixed";
  double snr = 3.0;
  std::string snr_convention = "root";
  double rho = 0.5;
  std::string m;
  std::size_t cv = 5;
  std::uint64_t seed = 1;
  std::size_t threads = 0;
  std::string out = "bench.tsv";
  std::string manifest;
};

struct OracleCheckOptions {
  std::string suite = "all";
  std::size_t mc_n = 1000000;
  double rho = 0.5;
  std::size_t reps = 200;
  std::string n_grid = "100,200,400,800";
  std::uint64_t seed = 1;
  std::size_t threads = 0;
  std::string out = "oracle_check.tsv";
  std::string manifest;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(DataOptions, data, x, y, response_col, delimiter)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SimulateOptions, design, n, p, depth, leaf_prob, rho, structure, mir,
                                                tree_mains, tree_pairs, snr, snr_convention, seed, test_n, test_seed,
                                                out, truth, test_out, manifest)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(FitOptions, input, method, m, eta, squares_step1, cv, seed, threads,
                                                sis_m, truth, n_lambda, lambda_min_ratio, max_iter, protocol, methods, out,
                                                metrics, manifest)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PredictOptions, model, input, no_response, out, manifest)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(BenchOptions, p_grid, n, test_n, reps, methods, structure, snr,
                                                snr_convention, rho, m, cv, seed, threads, out, manifest)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(OracleCheckOptions, suite, mc_n, rho, reps, n_grid, seed, threads,
                                                out, manifest)

void resolve(SimulateOptions& o);
void resolve(FitOptions& o);
void resolve(PredictOptions& o);
void resolve(BenchOptions& o);
void resolve(OracleCheckOptions& o);

RunRecord run_simulate(const SimulateOptions& o, std::ostream& log);
RunRecord run_fit(const FitOptions& o, std::ostream& log);
RunRecord run_predict(const PredictOptions& o, std::ostream& log);
/// Same inputs as fit; writes the cross-validation curve(s) instead of a model.
RunRecord run_cv(const FitOptions& o, std::ostream& log);
RunRecord run_bench(const BenchOptions& o, std::ostream& log);
RunRecord run_oracle_check(const OracleCheckOptions& o, std::ostream& log);

/// Least-squares slope of log(y) on log(x).
double log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace sprinter::cli
