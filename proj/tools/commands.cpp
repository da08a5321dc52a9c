#include "commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>

#include "sprinter/alloc_tracker.hpp"
#include "sprinter/error.hpp"
#include "sprinter/io.hpp"
#include "sprinter/model_io.hpp"
#include "sprinter/oracle.hpp"
#include "sprinter/parallel.hpp"
#include "sprinter/pipeline.hpp"
#include "sprinter/simgen.hpp"
#include "table.hpp"

namespace sprinter::cli {

using nlohmann::json;
using pipeline::Method;

namespace {

constexpr std::uint64_t kTestSeedOffset = 1000003;

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

void default_manifest(std::string& manifest, const std::string& out) {
  if (manifest.empty()) manifest = out + ".manifest.json";
}

void require_out(const std::string& out, const char* command) {
  if (out.empty()) throw ConfigError(std::string(command) + ": --out is required");
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty()) throw ConfigError("empty list '" + text + "'");
  return out;
}

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c) != 0; });
}

std::size_t parse_count(const std::string& s, const std::string& what) {
  if (!all_digits(s)) throw ConfigError(what + ": expected a non-negative integer, got '" + s + "'");
  try {
    return static_cast<std::size_t>(std::stoull(s));
  } catch (const std::exception&) {
    throw ConfigError(what + ": '" + s + "' is out of range");
  }
}

std::vector<std::size_t> parse_counts(const std::string& text, const std::string& what) {
  std::vector<std::size_t> out;
  for (const auto& item : split_list(text)) out.push_back(parse_count(item, what));
  return out;
}

Method parse_method_flag(std::string name) {
  std::replace(name.begin(), name.end(), '-', '_');
  return pipeline::parse_method(name);
}

char parse_delimiter(const std::string& d) {
  if (d == "auto") return '\0';
  if (d == "comma") return ',';
  if (d == "tab") return '\t';
  if (d.size() == 1) return d[0];
  throw ConfigError("--delimiter: expected auto, comma, tab or a single character, got '" + d + "'");
}

Dataset load_data(const DataOptions& o, RunRecord& record, bool want_response) {
  io::CsvOptions csv;
  csv.delimiter = parse_delimiter(o.delimiter);
  if (!o.data.empty()) {
    if (!o.x.empty() || !o.y.empty()) throw ConfigError("--data cannot be combined with --x/--y");
    if (want_response) {
      if (all_digits(o.response_col)) {
        csv.response_index = parse_count(o.response_col, "--response-col");
      } else {
        csv.response_name = o.response_col;
      }
    }
    record.inputs.push_back(o.data);
    return io::read_dataset(o.data, csv);
  }
  if (o.x.empty()) throw ConfigError("give either --data or --x");
  record.inputs.push_back(o.x);
  Dataset x = io::read_dataset(o.x, csv);
  if (!want_response) {
    if (!o.y.empty()) throw ConfigError("--y given but the response is not used here");
    return x;
  }
  if (o.y.empty()) throw ConfigError("--x needs --y");
  record.inputs.push_back(o.y);
  std::vector<double> y = io::read_vector(o.y);
  if (y.size() != x.n()) {
    throw InputError(o.y + ": " + std::to_string(y.size()) + " responses for " + std::to_string(x.n()) +
                     " rows in " + o.x);
  }
  return x.with_response(std::move(y));
}

std::optional<std::size_t> resolve_m(const std::string& m, std::size_t n) {
  if (m == "n") return screen::default_m(n);
  if (m == "n-over-log-n") return screen::m_over_log_n(n);
  return parse_count(m, "--m");
}

double parse_eta(const std::string& eta) {
  if (eta == "inf" || eta == "+inf") return std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(eta, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != eta.size() || !(v >= 0.0)) throw ConfigError("--eta: expected a number >= 0 or inf, got '" + eta + "'");
  return v;
}

pipeline::SprinterConfig make_config(const FitOptions& o, std::size_t n) {
  pipeline::SprinterConfig c;
  c.include_squares_step1 = o.squares_step1;
  if (!o.eta.empty()) {
    c.mode = screen::Mode::threshold;
    c.eta = parse_eta(o.eta);
  } else {
    c.mode = screen::Mode::top_m;
    c.m = resolve_m(o.m, n);
  }
  c.folds = o.cv;
  c.seed = o.seed;
  c.threads = o.threads;
  c.lasso.n_lambda = o.n_lambda;
  if (o.lambda_min_ratio > 0.0) c.lasso.lambda_min_ratio = o.lambda_min_ratio;
  c.lasso.max_iter = o.max_iter;
  c.lasso.threads = o.threads;
  c.limits = pipeline::ResourceLimits::from_environment();
  return c;
}

std::vector<Term> read_support(const std::string& truth_path, std::size_t p, RunRecord& record) {
  if (truth_path.empty()) throw ConfigError("fit: --method oracle_ls needs --truth");
  record.inputs.push_back(truth_path);
  json doc;
  try {
    doc = json::parse(io::read_file(truth_path));
  } catch (const json::exception& e) {
    throw SchemaError(truth_path + ": " + e.what());
  }
  if (!doc.contains("support") || !doc["support"].is_array()) throw SchemaError(truth_path + ": missing 'support'");
  std::vector<Term> support;
  for (const auto& t : doc["support"]) support.push_back(model_io::term_from_json(t, p));
  return support;
}

std::size_t pair_terms(const pipeline::Model& model) {
  std::size_t count = 0;
  for (const auto& [c, b] : model.fit.coefficients) count += model.terms.at(c).is_main() ? 0 : 1;
  return count;
}

std::uint64_t pairs_scanned(const pipeline::Model& model) {
  return model.steps ? model.steps->screened.stats.pairs_scanned : 0;
}

json model_summary(const pipeline::Model& model, const Dataset& data) {
  json s;
  s["method"] = std::string(pipeline::method_name(model.method));
  s["n"] = data.n();
  s["p"] = data.p();
  s["lambda"] = model.fit.lambda;
  s["best_index"] = model.best_index;
  s["nonzero"] = model.fit.coefficients.size();
  s["pair_terms"] = pair_terms(model);
  s["screened"] = model.screened.size();
  s["converged"] = model.fit.converged;
  if (model.steps) {
    s["step1_lambda"] = model.steps->step1.lambda;
    s["screening_skipped"] = model.steps->screening_skipped;
    s["pairs_scanned"] = model.steps->screened.stats.pairs_scanned;
    s["peak_tracked"] = model.steps->screened.stats.peak_tracked;
    s["zero_variance_pairs"] = model.steps->screened.stats.zero_variance;
  }
  return s;
}

void print_summary(std::ostream& log, const pipeline::Model& model, const Dataset& data, double seconds) {
  log << "method        " << pipeline::method_name(model.method) << '\n'
      << "n, p          " << data.n() << ", " << data.p() << '\n';
  if (model.steps) log << "step1 lambda  " << cell(model.steps->step1.lambda) << '\n';
  log << "lambda        " << cell(model.fit.lambda) << '\n'
      << "screened      " << model.screened.size() << '\n'
      << "nonzero       " << model.fit.coefficients.size() << " (" << pair_terms(model) << " interactions)\n"
      << "fit seconds   " << cell(seconds) << '\n';
  for (const auto& w : model.warnings) log << "warning: " << w << '\n';
}

void finish_table(const Table& table, const std::string& path, RunRecord& record) {
  table.write(path);
  record.outputs.push_back({path, sha256_text(table.reproducible_text())});
}

RunRecord run_protocol(const FitOptions& o, std::ostream& log) {
  RunRecord record;
  const Dataset data = load_data(o.input, record, true);
  constexpr std::size_t kSizeA = 30, kSizeB = 31;
  if (data.n() < kSizeA + kSizeB) {
    throw ConfigError("riboflavin-split: needs at least 61 rows, got " + std::to_string(data.n()));
  }
  std::vector<std::size_t> order(data.n());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(o.seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> a(order.begin(), order.begin() + kSizeA);
  std::vector<std::size_t> b(order.begin() + kSizeA, order.begin() + kSizeA + kSizeB);
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const Dataset set_a = data.subset_rows(a), set_b = data.subset_rows(b);

  Table table;
  for (const char* c : {"method", "train", "test", "n_train", "n_test", "lambda", "nonzero", "pair_terms", "screened",
                        "mse", "r2_normalized"}) {
    table.column(c);
  }
  table.column("fit_seconds", true);
  json summary = json::object();
  for (const auto& name : split_list(o.methods)) {
    const Method method = parse_method_flag(name);
    if (method == Method::oracle_ls) throw ConfigError("riboflavin-split: oracle_ls has no known support here");
    double r2_sum = 0.0;
    for (int swap = 0; swap < 2; ++swap) {
      const Dataset& train = swap == 0 ? set_a : set_b;
      const Dataset& test = swap == 0 ? set_b : set_a;
      const auto start = std::chrono::steady_clock::now();
      const pipeline::Model model = pipeline::fit(method, train, make_config(o, train.n()), {},
                                                  o.sis_m ? std::optional(o.sis_m) : std::nullopt);
      const double seconds = seconds_since(start);
      record.fit_seconds += seconds;
      const pipeline::Evaluation ev = pipeline::evaluate(model, test);
      const double r2 = ev.r_squared_normalized.value_or(std::numeric_limits<double>::quiet_NaN());
      r2_sum += r2;
      table.add_row({std::string(pipeline::method_name(method)), swap == 0 ? "A" : "B", swap == 0 ? "B" : "A",
                     cell(train.n()), cell(test.n()), cell(model.fit.lambda), cell(model.fit.coefficients.size()),
                     cell(pair_terms(model)), cell(model.screened.size()), cell(ev.mse), cell(r2), cell(seconds)});
      for (const auto& w : model.warnings) record.warnings.push_back(name + ": " + w);
      if (!model.fit.converged) record.exit_code = 5;
    }
    summary[std::string(pipeline::method_name(method))] = r2_sum / 2.0;
    log << pipeline::method_name(method) << "  mean normalized r2 " << cell(r2_sum / 2.0) << '\n';
  }
  finish_table(table, o.out, record);
  record.results = {{"protocol", o.protocol}, {"mean_r2_normalized", summary}, {"unused_rows", data.n() - 61}};
  return record;
}

pipeline::Model fit_from_options(const FitOptions& o, const Dataset& data, RunRecord& record, double& seconds) {
  const Method method = parse_method_flag(o.method);
  std::vector<Term> support;
  if (method == Method::oracle_ls) support = read_support(o.truth, data.p(), record);
  const pipeline::SprinterConfig config = make_config(o, data.n());
  const auto start = std::chrono::steady_clock::now();
  pipeline::Model model =
      pipeline::fit(method, data, config, support, o.sis_m ? std::optional(o.sis_m) : std::nullopt);
  seconds = seconds_since(start);
  record.fit_seconds = seconds;
  record.warnings = model.warnings;
  if (!model.fit.converged) record.exit_code = 5;
  return model;
}

json mir_json(std::optional<double> mir) {
  if (!mir) return nullptr;
  if (std::isinf(*mir)) return "inf";
  return *mir;
}

}  // namespace

double log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ConfigError("slope: need at least two points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
    sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
  }
  return sxy / sxx;
}

// ---- resolve -------------------------------------------------------------

void resolve(SimulateOptions& o) {
  require_out(o.out, "simulate");
  if (o.design != "gaussian" && o.design != "tree") throw ConfigError("simulate: --design must be gaussian or tree");
  if (o.snr_convention.empty()) o.snr_convention = o.design == "tree" ? "squared" : "root";
  if (o.design == "tree") o.p = simgen::tree_nodes(o.depth);
  if (o.test_seed == 0) o.test_seed = o.seed + kTestSeedOffset;
  if (o.truth.empty()) o.truth = o.out + ".truth.json";
  if (o.test_n > 0 && o.test_out.empty()) o.test_out = o.out + ".test.csv";
  default_manifest(o.manifest, o.out);
}

void resolve(FitOptions& o) {
  require_out(o.out, "fit");
  if (!o.eta.empty() && !o.m.empty()) throw ConfigError("fit: --m and --eta select different modes; give one");
  if (o.eta.empty() && o.m.empty()) o.m = "n";
  if (o.protocol != "none" && o.protocol != "riboflavin-split") {
    throw ConfigError("fit: unknown --protocol '" + o.protocol + "'");
  }
  o.threads = resolve_threads(o.threads);
  default_manifest(o.manifest, o.out);
}

void resolve(PredictOptions& o) {
  require_out(o.out, "predict");
  if (o.model.empty()) throw ConfigError("predict: --model is required");
  default_manifest(o.manifest, o.out);
}

void resolve(BenchOptions& o) {
  require_out(o.out, "bench");
  if (o.m.empty()) o.m = "n";
  o.threads = resolve_threads(o.threads);
  default_manifest(o.manifest, o.out);
}

void resolve(OracleCheckOptions& o) {
  require_out(o.out, "oracle-check");
  static const std::vector<std::string> suites{"gaussian", "bernoulli", "moments", "screening-recovery", "all"};
  if (std::find(suites.begin(), suites.end(), o.suite) == suites.end()) {
    throw ConfigError("oracle-check: unknown suite '" + o.suite + "'");
  }
  o.threads = resolve_threads(o.threads);
  default_manifest(o.manifest, o.out);
}

// ---- simulate ------------------------------------------------------------

RunRecord run_simulate(const SimulateOptions& o, std::ostream& log) {
  RunRecord record;
  const simgen::SnrConvention convention = simgen::parse_snr_convention(o.snr_convention);
  Dataset features;
  simgen::SignalSpec spec;
  auto draw_features = [&](std::size_t n, std::uint64_t seed) {
    return o.design == "tree" ? simgen::gen_binary_tree(o.depth, o.leaf_prob, n, seed)
                              : simgen::gen_gaussian_ar(n, o.p, o.rho, seed);
  };
  if (o.design == "tree") {
    spec = simgen::tree_structure(o.depth, simgen::parse_mir_preset(o.mir), o.seed, o.tree_mains, o.tree_pairs);
  } else {
    spec = simgen::structure(simgen::parse_structure(o.structure), o.p);
  }
  features = draw_features(o.n, o.seed);
  const auto start = std::chrono::steady_clock::now();
  const simgen::SimulatedData sim = simgen::make_response(features, spec, o.snr, convention, o.seed);
  std::optional<double> mir;
  if (o.n > o.p && spec.has_interactions()) mir = simgen::mir(features, spec);
  record.fit_seconds = seconds_since(start);

  io::write_dataset(o.out, sim.data);
  record.outputs.push_back({o.out, std::nullopt});

  json truth;
  truth["format"] = "sprinter-truth";
  truth["version"] = 1;
  truth["index_base"] = 0;
  truth["design"] = o.design;
  truth["n"] = o.n;
  truth["p"] = features.p();
  truth["structure"] = spec.name;
  truth["t1"] = spec.t1;
  truth["t2"] = spec.t2;
  json t3 = json::array();
  for (const auto& [j, k] : spec.t3) t3.push_back({j, k});
  truth["t3"] = t3;
  truth["beta"] = spec.beta_value;
  truth["gamma"] = spec.gamma_value;
  json support = json::array(), coefs = json::array();
  for (const auto& t : spec.support()) support.push_back(model_io::term_json(t));
  for (const auto& [t, v] : spec.coefficients()) coefs.push_back({{"term", model_io::term_json(t)}, {"value", v}});
  truth["support"] = support;
  truth["coefficients"] = coefs;
  truth["sigma"] = sim.sigma;
  truth["snr"] = sim.snr;
  truth["snr_convention"] = std::string(simgen::snr_convention_name(convention));
  truth["seed"] = o.seed;
  truth["mir"] = mir_json(mir);
  if (o.test_n > 0) truth["test_seed"] = o.test_seed;
  io::write_file(o.truth, truth.dump(2) + "\n");
  record.outputs.push_back({o.truth, std::nullopt});

  if (o.test_n > 0) {
    const Dataset test = simgen::respond_with_sigma(draw_features(o.test_n, o.test_seed), spec, sim.sigma, o.test_seed);
    io::write_dataset(o.test_out, test);
    record.outputs.push_back({o.test_out, std::nullopt});
  }

  log << "design     " << o.design << " (" << spec.name << ")\n"
      << "n, p       " << o.n << ", " << features.p() << '\n'
      << "sigma      " << cell(sim.sigma) << '\n'
      << "mir        " << (mir ? cell(*mir) : std::string("n/a (needs n > p and interactions)")) << '\n';
  record.results = {{"p", features.p()}, {"sigma", sim.sigma}, {"mir", mir_json(mir)}};
  return record;
}

// ---- fit / cv / predict --------------------------------------------------

RunRecord run_fit(const FitOptions& o, std::ostream& log) {
  if (o.protocol == "riboflavin-split") return run_protocol(o, log);
  RunRecord record;
  const Dataset data = load_data(o.input, record, true);
  double seconds = 0.0;
  const pipeline::Model model = fit_from_options(o, data, record, seconds);
  model_io::save(o.out, model);
  record.outputs.push_back({o.out, std::nullopt});
  print_summary(log, model, data, seconds);

  json summary = model_summary(model, data);
  if (!o.eta.empty()) {
    summary["eta"] = o.eta;
  } else {
    summary["m"] = *resolve_m(o.m, data.n());
  }
  const pipeline::Evaluation train = pipeline::evaluate(model, data);
  summary["train_mse"] = train.mse;
  record.results = summary;

  if (!o.metrics.empty()) {
    Table table;
    for (const char* c : {"method", "n", "p", "lambda", "best_index", "nonzero", "pair_terms", "screened",
                          "pairs_scanned", "train_mse", "converged"}) {
      table.column(c);
    }
    table.column("fit_seconds", true);
    table.add_row({std::string(pipeline::method_name(model.method)), cell(data.n()), cell(data.p()),
                   cell(model.fit.lambda), cell(model.best_index), cell(model.fit.coefficients.size()),
                   cell(pair_terms(model)), cell(model.screened.size()), std::to_string(pairs_scanned(model)),
                   cell(train.mse), model.fit.converged ? "true" : "false", cell(seconds)});
    finish_table(table, o.metrics, record);
  }
  if (record.exit_code == 5) log << "error: the selected fit did not converge\n";
  return record;
}

RunRecord run_cv(const FitOptions& o, std::ostream& log) {
  if (o.protocol != "none") throw ConfigError("cv: --protocol applies to fit only");
  if (parse_method_flag(o.method) == Method::oracle_ls) throw ConfigError("cv: oracle_ls has no tuning parameter");
  RunRecord record;
  const Dataset data = load_data(o.input, record, true);
  double seconds = 0.0;
  const pipeline::Model model = fit_from_options(o, data, record, seconds);

  Table table;
  for (const char* c : {"step", "index", "lambda", "cv_mean", "cv_se", "selected"}) table.column(c);
  auto add_curve = [&](const char* step, const std::vector<double>& lambdas, const lasso::CvErrors& cv,
                       double chosen) {
    for (std::size_t i = 0; i < lambdas.size(); ++i) {
      table.add_row({step, cell(i), cell(lambdas[i]), cell(cv.mean.at(i)), cell(cv.se.at(i)),
                     lambdas[i] == chosen ? "1" : "0"});
    }
  };
  if (model.steps) add_curve("step1", model.steps->step1_lambdas, model.steps->step1_cv, model.steps->step1.lambda);
  if (model.cv) add_curve(model.steps ? "step3" : "final", model.lambdas, *model.cv, model.fit.lambda);
  finish_table(table, o.out, record);
  print_summary(log, model, data, seconds);
  record.results = model_summary(model, data);
  return record;
}

RunRecord run_predict(const PredictOptions& o, std::ostream& log) {
  RunRecord record;
  record.inputs.push_back(o.model);
  const pipeline::Model model = model_io::load(o.model);
  const Dataset data = load_data(o.input, record, !o.no_response);
  const auto start = std::chrono::steady_clock::now();
  const std::vector<double> y_hat = model.predict(data);
  record.fit_seconds = seconds_since(start);
  std::string text = "y_hat\n";
  for (double v : y_hat) text += io::format_double(v) + "\n";
  io::write_file(o.out, text);
  record.outputs.push_back({o.out, std::nullopt});
  record.results = {{"n", data.n()}};
  if (data.has_response()) {
    const pipeline::Evaluation ev = pipeline::evaluate_predictions(data.y(), y_hat);
    record.results["mse"] = ev.mse;
    if (ev.r_squared_normalized) record.results["r2_normalized"] = *ev.r_squared_normalized;
    log << "mse           " << cell(ev.mse) << '\n';
    if (ev.r_squared_normalized) log << "r2 normalized " << cell(*ev.r_squared_normalized) << '\n';
  }
  log << "predictions   " << y_hat.size() << " rows -> " << o.out << '\n';
  return record;
}

// ---- bench ---------------------------------------------------------------

RunRecord run_bench(const BenchOptions& o, std::ostream& log) {
  RunRecord record;
  const std::vector<std::size_t> grid = parse_counts(o.p_grid, "--p-grid");
  std::vector<Method> methods;
  for (const auto& name : split_list(o.methods)) methods.push_back(parse_method_flag(name));
  const simgen::Structure structure = simgen::parse_structure(o.structure);
  const simgen::SnrConvention convention = simgen::parse_snr_convention(o.snr_convention);
  FitOptions fit_options;
  fit_options.m = o.m;
  fit_options.cv = o.cv;
  fit_options.seed = o.seed;
  fit_options.threads = o.threads;

  Table table;
  for (const char* c : {"p", "rep", "method", "status", "q", "apl_design_bytes", "test_mse", "nonzero", "pair_terms",
                        "screened", "pairs_scanned", "peak_tracked"}) {
    table.column(c);
  }
  table.column("fit_seconds", true);
  table.column("peak_heap_bytes", true);

  struct Cell {
    double seconds = 0, peak = 0, mse = 0;
    std::size_t ok = 0;
  };
  std::map<std::pair<std::size_t, Method>, Cell> cells;
  for (std::size_t p : grid) {
    const std::size_t q = p * (p + 1) / 2;
    const double apl_bytes = static_cast<double>(o.n) * static_cast<double>(p + q) * sizeof(double);
    for (std::size_t rep = 0; rep < o.reps; ++rep) {
      const std::uint64_t seed = o.seed + rep;
      const simgen::SignalSpec spec = simgen::structure(structure, p);
      const simgen::SimulatedData sim =
          simgen::make_response(simgen::gen_gaussian_ar(o.n, p, o.rho, seed), spec, o.snr, convention, seed);
      const std::uint64_t test_seed = seed + kTestSeedOffset;
      const Dataset test =
          simgen::respond_with_sigma(simgen::gen_gaussian_ar(o.test_n, p, o.rho, test_seed), spec, sim.sigma, test_seed);
      for (Method method : methods) {
        std::string status = "ok";
        std::optional<pipeline::Model> model;
        alloc::reset();
        const alloc::Snapshot before = alloc::snapshot();
        const auto start = std::chrono::steady_clock::now();
        try {
          model = pipeline::fit(method, sim.data, make_config(fit_options, o.n), spec.support());
        } catch (const ResourceError& e) {
          status = "resource";
          record.warnings.push_back(std::string(pipeline::method_name(method)) + " p=" + std::to_string(p) + ": " +
                                    e.what());
        }
        const double seconds = seconds_since(start);
        const double peak = static_cast<double>(alloc::peak_above(before, alloc::snapshot()));
        record.fit_seconds += seconds;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        const double mse = model ? pipeline::evaluate(*model, test).mse : nan;
        table.add_row({cell(p), cell(rep), std::string(pipeline::method_name(method)), status, cell(q),
                       cell(apl_bytes), cell(mse), model ? cell(model->fit.coefficients.size()) : "nan",
                       model ? cell(pair_terms(*model)) : "nan", model ? cell(model->screened.size()) : "nan",
                       model ? std::to_string(pairs_scanned(*model)) : "nan",
                       model && model->steps ? cell(model->steps->screened.stats.peak_tracked) : "0", cell(seconds),
                       cell(peak)});
        if (model) {
          Cell& c = cells[{p, method}];
          c.seconds += seconds;
          c.peak += peak;
          c.mse += mse;
          ++c.ok;
        }
      }
    }
  }
  finish_table(table, o.out, record);

  // Per-p means, speedups and log-log memory slopes.
  json per_p = json::array();
  log << "p\tmethod\tmean_seconds\tmean_test_mse\tmean_peak_bytes\n";
  for (std::size_t p : grid) {
    for (Method m : methods) {
      auto it = cells.find({p, m});
      if (it == cells.end()) continue;
      const Cell& c = it->second;
      const double k = static_cast<double>(c.ok);
      log << p << '\t' << pipeline::method_name(m) << '\t' << cell(c.seconds / k) << '\t' << cell(c.mse / k) << '\t'
          << cell(c.peak / k) << '\n';
      per_p.push_back({{"p", p}, {"method", std::string(pipeline::method_name(m))}, {"mean_seconds", c.seconds / k},
                       {"mean_test_mse", c.mse / k}, {"mean_peak_bytes", c.peak / k}});
    }
  }
  json slopes = json::object();
  if (grid.size() >= 2) {
    std::vector<double> ps, apl;
    for (std::size_t p : grid) {
      ps.push_back(static_cast<double>(p));
      apl.push_back(static_cast<double>(o.n) * static_cast<double>(p + p * (p + 1) / 2) * sizeof(double));
    }
    slopes["apl_design_estimate"] = log_log_slope(ps, apl);
    log << "log-log slope apl design estimate  " << cell(slopes["apl_design_estimate"].get<double>()) << '\n';
    for (Method m : methods) {
      std::vector<double> xs, peaks;
      for (std::size_t p : grid) {
        auto it = cells.find({p, m});
        if (it == cells.end() || it->second.peak <= 0) continue;
        xs.push_back(static_cast<double>(p));
        peaks.push_back(it->second.peak / static_cast<double>(it->second.ok));
      }
      if (xs.size() < 2) continue;
      const double s = log_log_slope(xs, peaks);
      slopes[std::string(pipeline::method_name(m)) + "_peak"] = s;
      log << "log-log slope " << pipeline::method_name(m) << " peak heap  " << cell(s) << '\n';
    }
  }
  json speedup = json::array();
  for (std::size_t p : grid) {
    auto sp = cells.find({p, Method::sprinter});
    auto apl = cells.find({p, Method::apl});
    if (sp == cells.end() || apl == cells.end()) continue;
    const double ratio = (apl->second.seconds / apl->second.ok) / (sp->second.seconds / sp->second.ok);
    speedup.push_back({{"p", p}, {"apl_over_sprinter", ratio}});
    log << "p=" << p << "  apl/sprinter wall-clock " << cell(ratio) << '\n';
  }
  record.results = {{"per_p", per_p}, {"slopes", slopes}, {"speedup", speedup}};
  return record;
}

// ---- oracle-check --------------------------------------------------------

RunRecord run_oracle_check(const OracleCheckOptions& o, std::ostream& log) {
  RunRecord record;
  Table table;
  for (const char* c : {"suite", "check", "value", "reference", "tolerance", "pass"}) table.column(c);
  std::size_t failures = 0;
  auto add = [&](const std::string& suite, const std::string& check, double value, double reference,
                 const std::string& tolerance, bool pass) {
    table.add_row({suite, check, cell(value), cell(reference), tolerance, pass ? "PASS" : "FAIL"});
    if (!pass) {
      ++failures;
      log << "FAIL " << suite << ' ' << check << ": " << cell(value) << " vs " << cell(reference) << '\n';
    }
  };
  const bool all = o.suite == "all";
  const auto start = std::chrono::steady_clock::now();

  if (all || o.suite == "gaussian") {
    const double r = o.rho;
    const Eigen::MatrixXd sigma = oracle::ar_correlation(4, r);
    add("gaussian", "closed_form_var_z", oracle::gaussian_interaction_var(sigma, {0, 1}), 1 + r * r, "1e-15 abs",
        std::abs(oracle::gaussian_interaction_var(sigma, {0, 1}) - (1 + r * r)) <= 1e-15);
    for (const auto& c : oracle::gaussian_moment_checks(r, o.mc_n, o.seed)) {
      add("gaussian", c.name, c.estimate, c.analytic, "0.01 rel", c.relative_error() < 0.01);
    }
  }
  if (all || o.suite == "bernoulli") {
    for (int a = 1; a <= 9; ++a) {
      for (int b = 1; b <= 9; ++b) {
        const double p1 = a / 10.0, p2 = b / 10.0;
        const oracle::BernoulliSignal e = oracle::bernoulli_enumerate(p1, p2, 1.0);
        const double psi = p1 * p2 * (1 - p1 * p2);
        const double cov = p1 * p2 * (1 + p1 * p2 - p1 - p2);
        const std::string tag = "p1=" + cell(p1) + ",p2=" + cell(p2);
        add("bernoulli", "psi " + tag, e.psi, psi, "1e-15 abs", std::abs(e.psi - psi) <= 1e-15);
        add("bernoulli", "cov_zw " + tag, e.cov_zw, cov, "1e-15 abs", std::abs(e.cov_zw - cov) <= 1e-15);
      }
    }
  }
  if (all || o.suite == "moments") {
    for (auto d : {oracle::MomentDistribution::gaussian, oracle::MomentDistribution::product2,
                   oracle::MomentDistribution::product3, oracle::MomentDistribution::product4}) {
      for (int k = 1; k <= 4; ++k) {
        const oracle::MomentCheck c = oracle::moment_bound_check(d, k, o.mc_n, o.seed + static_cast<std::uint64_t>(k));
        add("moments", std::string(oracle::distribution_name(d)) + " k=" + std::to_string(k), c.lhs, c.rhs,
            "lhs <= rhs + 3 se", c.holds);
      }
    }
  }
  if (all || o.suite == "screening-recovery") {
    oracle::RecoveryScenario s;
    s.threads = o.threads;
    const auto ns = parse_counts(o.n_grid, "--n-grid");
    const auto rows = oracle::screening_recovery_experiment(s, ns, o.reps, o.seed);
    for (const auto& row : rows) {
      const bool checked = row.n >= 400;
      add("screening-recovery", "frequency n=" + std::to_string(row.n), row.frequency(), checked ? 0.95 : 0.0,
          checked ? ">= 0.95" : "reported", !checked || row.frequency() >= 0.95);
    }
    add("screening-recovery", "nondecreasing in n", oracle::nondecreasing_within_noise(rows) ? 1 : 0, 1,
        "within 3 binomial se", oracle::nondecreasing_within_noise(rows));
  }
  record.fit_seconds = seconds_since(start);
  finish_table(table, o.out, record);
  log << table.rows().size() - failures << "/" << table.rows().size() << " checks passed\n";
  record.results = {{"checks", table.rows().size()}, {"failures", failures}};
  if (failures > 0) record.exit_code = 6;
  return record;
}

}  // namespace sprinter::cli
