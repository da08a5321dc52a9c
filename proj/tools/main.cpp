#include <chrono>
#include <filesystem>
#include <iostream>
#include <new>

#include "CLI11.hpp"
#include "commands.hpp"
#include "sprinter/alloc_tracker.hpp"
#include "sprinter/error.hpp"
#include "sprinter/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sprinter;
using namespace sprinter::cli;

namespace {

enum Exit : int {
  kOk = 0,
  kGeneric = 1,
  kConfig = 2,
  kInput = 3,
  kResource = 4,
  kConvergence = 5,
  kCheckFailed = 6,
  kNumeric = 7,
};

template <class Options, class Run>
int drive(const std::string& subcommand, Options options, Run run, json* manifest_out = nullptr) {
  resolve(options);
  alloc::reset();
  const alloc::Snapshot before = alloc::snapshot();
  const auto start = std::chrono::steady_clock::now();
  RunRecord record = run(options, std::cout);
  ManifestContext context;
  context.subcommand = subcommand;
  context.options = options;
  if constexpr (requires { options.seed; }) context.seed = options.seed;
  if constexpr (requires { options.threads; }) {
    context.threads = options.threads;
  } else {
    context.threads = 1;
  }
  context.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  context.peak_heap_bytes = alloc::peak_above(before, alloc::snapshot());
  const json manifest = make_manifest(context, record);
  io::write_file(options.manifest, manifest.dump(2) + "\n");
  if (manifest_out != nullptr) *manifest_out = manifest;
  return record.exit_code;
}

void redirect(json& options, const char* key, const fs::path& dir) {
  if (!options.contains(key) || !options[key].is_string()) return;
  const std::string value = options[key].get<std::string>();
  if (!value.empty()) options[key] = (dir / fs::path(value).filename()).string();
}

int dispatch(const std::string& subcommand, const json& options, json* manifest_out) {
  if (subcommand == "simulate") return drive(subcommand, options.get<SimulateOptions>(), run_simulate, manifest_out);
  if (subcommand == "fit") return drive(subcommand, options.get<FitOptions>(), run_fit, manifest_out);
  if (subcommand == "cv") return drive(subcommand, options.get<FitOptions>(), run_cv, manifest_out);
  if (subcommand == "predict") return drive(subcommand, options.get<PredictOptions>(), run_predict, manifest_out);
  if (subcommand == "bench") return drive(subcommand, options.get<BenchOptions>(), run_bench, manifest_out);
  if (subcommand == "oracle-check") {
    return drive(subcommand, options.get<OracleCheckOptions>(), run_oracle_check, manifest_out);
  }
  throw SchemaError("replay: unknown subcommand '" + subcommand + "'");
}

int replay(const std::string& manifest_path, std::string output_dir) {
  json doc;
  try {
    doc = json::parse(io::read_file(manifest_path));
  } catch (const json::exception& e) {
    throw SchemaError(manifest_path + ": " + e.what());
  }
  if (doc.value("format", "") != "sprinter-run") throw SchemaError(manifest_path + ": not a sprinter run manifest");
  int mismatches = 0;
  for (const auto& input : doc.at("inputs")) {
    const std::string path = input.at("path");
    if (sha256_file(path) != input.at("sha256").get<std::string>()) {
      std::cout << "input changed: " << path << '\n';
      ++mismatches;
    }
  }
  if (mismatches > 0) return kCheckFailed;

  if (output_dir.empty()) {
    output_dir = (fs::temp_directory_path() / ("sprinter-replay-" + sha256_file(manifest_path).substr(0, 12))).string();
  }
  fs::create_directories(output_dir);
  json options = doc.at("options");
  for (const char* key : {"out", "truth", "test_out", "metrics", "manifest"}) redirect(options, key, output_dir);

  json fresh;
  const int code = dispatch(doc.at("subcommand").get<std::string>(), options, &fresh);
  const auto& before = doc.at("outputs");
  const auto& after = fresh.at("outputs");
  if (before.size() != after.size()) {
    std::cout << "replay: " << after.size() << " outputs, manifest lists " << before.size() << '\n';
    return kCheckFailed;
  }
  auto digest = [](const json& entry) {
    return entry.contains("reproducible_sha256") ? entry["reproducible_sha256"].get<std::string>()
                                                 : entry.at("sha256").get<std::string>();
  };
  for (std::size_t i = 0; i < before.size(); ++i) {
    const bool same = digest(before[i]) == digest(after[i]);
    std::cout << (same ? "identical  " : "DIFFERENT  ") << before[i].at("path").get<std::string>() << "  vs  "
              << after[i].at("path").get<std::string>() << '\n';
    if (!same) ++mismatches;
  }
  if (code != doc.value("exit_code", 0)) {
    std::cout << "replay: exit code " << code << ", manifest records " << doc.value("exit_code", 0) << '\n';
    ++mismatches;
  }
  return mismatches > 0 ? kCheckFailed : kOk;
}

void add_data_options(CLI::App* cmd, DataOptions& d) {
  cmd->add_option("--data", d.data, "Combined CSV/TSV with a header row");
  cmd->add_option("--x", d.x, "Feature file (header row, one column per feature)");
  cmd->add_option("--y", d.y, "Response file (one column with header)");
  cmd->add_option("--response-col", d.response_col, "Response column in --data: header name or 0-based index")
      ->capture_default_str();
  cmd->add_option("--delimiter", d.delimiter, "auto, comma, tab or a single character")->capture_default_str();
}

void add_fit_options(CLI::App* cmd, FitOptions& f, bool with_protocol) {
  add_data_options(cmd, f.input);
  cmd->add_option("--method", f.method, "sprinter, apl, mel, sis or oracle_ls")->capture_default_str();
  cmd->add_option("--m", f.m, "Top-m screening budget: an integer, n, or n-over-log-n (default n)");
  cmd->add_option("--eta", f.eta, "Threshold screening cutoff (>= 0 or inf) instead of top-m");
  cmd->add_flag("--squares-step1,!--no-squares-step1", f.squares_step1, "Include squared terms in step 1")
      ->capture_default_str();
  cmd->add_option("--cv", f.cv, "Cross-validation folds")->capture_default_str();
  cmd->add_option("--seed", f.seed, "Fold assignment seed")->capture_default_str();
  cmd->add_option("--threads", f.threads, "Worker threads (0: SPRINTER_THREADS or all cores)")->capture_default_str();
  cmd->add_option("--sis-m", f.sis_m, "Columns kept by sis (0: n)")->capture_default_str();
  cmd->add_option("--truth", f.truth, "Truth file from simulate; supplies the oracle_ls support");
  cmd->add_option("--n-lambda", f.n_lambda, "Lambda grid length")->capture_default_str();
  cmd->add_option("--lambda-min-ratio", f.lambda_min_ratio, "Smallest lambda / lambda_max (0: by shape)")
      ->capture_default_str();
  cmd->add_option("--max-iter", f.max_iter, "Coordinate sweeps allowed per lambda")->capture_default_str();
  if (with_protocol) {
    cmd->add_option("--protocol", f.protocol, "none or riboflavin-split")->capture_default_str();
    cmd->add_option("--methods", f.methods, "Methods compared by --protocol")->capture_default_str();
    cmd->add_option("--metrics", f.metrics, "Also write a one-row metrics table here");
    cmd->add_option("--out", f.out, "Model file (protocol runs: results table)")->required();
  } else {
    cmd->add_option("--out", f.out, "Cross-validation table")->required();
  }
  cmd->add_option("--manifest", f.manifest, "Run manifest path (default: <out>.manifest.json)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse reluctant interaction modeling: simulate, fit, predict, cv, bench, oracle-check, replay"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "sprinter 1.0");

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a simulated dataset and its truth file");
  simulate->add_option("--design", sim.design, "gaussian or tree")->capture_default_str();
  simulate->add_option("--n", sim.n, "Rows")->capture_default_str();
  simulate->add_option("--p", sim.p, "Features (gaussian design)")->capture_default_str();
  simulate->add_option("--depth", sim.depth, "Tree depth; p = 2^(depth+1) - 1")->capture_default_str();
  simulate->add_option("--leaf-prob", sim.leaf_prob, "Tree leaf Bernoulli probability")->capture_default_str();
  simulate->add_option("--rho", sim.rho, "AR(1) correlation (gaussian design)")->capture_default_str();
  simulate->add_option("--structure", sim.structure,
                       "mixed, hierarchical, anti_hierarchical, interaction_only, main_only, squared_only")
      ->capture_default_str();
  simulate->add_option("--mir", sim.mir, "Tree preset: large, medium or small")->capture_default_str();
  simulate->add_option("--tree-mains", sim.tree_mains, "Tree main effects")->capture_default_str();
  simulate->add_option("--tree-pairs", sim.tree_pairs, "Tree interactions")->capture_default_str();
  simulate->add_option("--snr", sim.snr, "Signal-to-noise ratio")->capture_default_str();
  simulate->add_option("--snr-convention", sim.snr_convention, "squared or root (default: root gaussian, squared tree)");
  simulate->add_option("--seed", sim.seed, "Seed")->capture_default_str();
  simulate->add_option("--test-n", sim.test_n, "Also write an independent test set of this many rows")
      ->capture_default_str();
  simulate->add_option("--test-seed", sim.test_seed, "Test set seed (0: seed + 1000003)")->capture_default_str();
  simulate->add_option("--out", sim.out, "Dataset CSV")->required();
  simulate->add_option("--truth", sim.truth, "Truth JSON (default: <out>.truth.json)");
  simulate->add_option("--test-out", sim.test_out, "Test CSV (default: <out>.test.csv)");
  simulate->add_option("--manifest", sim.manifest, "Run manifest path (default: <out>.manifest.json)");

  FitOptions fit_opts;
  auto* fit = app.add_subcommand("fit", "Fit a model and write it as JSON");
  add_fit_options(fit, fit_opts, true);

  FitOptions cv_opts;
  auto* cv = app.add_subcommand("cv", "Write the cross-validation curve(s) of a fit");
  add_fit_options(cv, cv_opts, false);

  PredictOptions pred;
  auto* predict = app.add_subcommand("predict", "Predict from a saved model");
  predict->add_option("--model", pred.model, "Model file from fit")->required();
  add_data_options(predict, pred.input);
  predict->add_flag("--no-response", pred.no_response, "Every column is a feature; skip evaluation");
  predict->add_option("--out", pred.out, "Predictions CSV")->required();
  predict->add_option("--manifest", pred.manifest, "Run manifest path (default: <out>.manifest.json)");

  BenchOptions bench_opts;
  auto* bench = app.add_subcommand("bench", "Timing, memory and test error over a p grid");
  bench->add_option("--p-grid", bench_opts.p_grid, "Comma-separated feature counts")->capture_default_str();
  bench->add_option("--n", bench_opts.n, "Training rows")->capture_default_str();
  bench->add_option("--test-n", bench_opts.test_n, "Test rows")->capture_default_str();
  bench->add_option("--reps", bench_opts.reps, "Replications per p")->capture_default_str();
  bench->add_option("--methods", bench_opts.methods, "Comma-separated methods")->capture_default_str();
  bench->add_option("--structure", bench_opts.structure, "Signal structure")->capture_default_str();
  bench->add_option("--snr", bench_opts.snr, "Signal-to-noise ratio")->capture_default_str();
  bench->add_option("--snr-convention", bench_opts.snr_convention, "squared or root")->capture_default_str();
  bench->add_option("--rho", bench_opts.rho, "AR(1) correlation")->capture_default_str();
  bench->add_option("--m", bench_opts.m, "Top-m budget (default n)");
  bench->add_option("--cv", bench_opts.cv, "Cross-validation folds")->capture_default_str();
  bench->add_option("--seed", bench_opts.seed, "Base seed; replication r uses seed + r")->capture_default_str();
  bench->add_option("--threads", bench_opts.threads, "Worker threads")->capture_default_str();
  bench->add_option("--out", bench_opts.out, "Results table")->capture_default_str();
  bench->add_option("--manifest", bench_opts.manifest, "Run manifest path (default: <out>.manifest.json)");

  OracleCheckOptions oc;
  auto* oracle_check = app.add_subcommand("oracle-check", "Check closed forms against enumeration and Monte Carlo");
  oracle_check->add_option("--suite", oc.suite, "gaussian, bernoulli, moments, screening-recovery or all")
      ->capture_default_str();
  oracle_check->add_option("--mc-n", oc.mc_n, "Monte Carlo draws")->capture_default_str();
  oracle_check->add_option("--rho", oc.rho, "Gaussian correlation")->capture_default_str();
  oracle_check->add_option("--reps", oc.reps, "Recovery replications per n")->capture_default_str();
  oracle_check->add_option("--n-grid", oc.n_grid, "Recovery sample sizes")->capture_default_str();
  oracle_check->add_option("--seed", oc.seed, "Seed")->capture_default_str();
  oracle_check->add_option("--threads", oc.threads, "Worker threads")->capture_default_str();
  oracle_check->add_option("--out", oc.out, "Report table")->capture_default_str();
  oracle_check->add_option("--manifest", oc.manifest, "Run manifest path (default: <out>.manifest.json)");

  std::string replay_manifest, replay_dir;
  auto* replay_cmd = app.add_subcommand("replay", "Re-run a manifest and compare output digests");
  replay_cmd->add_option("--manifest", replay_manifest, "Manifest written by an earlier run")->required();
  replay_cmd->add_option("--output-dir", replay_dir, "Where replayed outputs go (default: a temp directory)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfig;
  }

  try {
    if (*simulate) return drive("simulate", sim, run_simulate);
    if (*fit) {
      if (fit_opts.protocol == "riboflavin-split" && fit->count("--seed") == 0) {
        throw ConfigError("fit: --protocol riboflavin-split needs an explicit --seed (the split is random)");
      }
      return drive("fit", fit_opts, run_fit);
    }
    if (*cv) return drive("cv", cv_opts, run_cv);
    if (*predict) return drive("predict", pred, run_predict);
    if (*bench) return drive("bench", bench_opts, run_bench);
    if (*oracle_check) return drive("oracle-check", oc, run_oracle_check);
    if (*replay_cmd) return replay(replay_manifest, replay_dir);
  } catch (const ConfigError& e) {
    std::cerr << "sprinter: config error: " << e.what() << '\n';
    return kConfig;
  } catch (const InputError& e) {
    std::cerr << "sprinter: input error: " << e.what() << '\n';
    return kInput;
  } catch (const SchemaError& e) {
    std::cerr << "sprinter: schema error: " << e.what() << '\n';
    return kInput;
  } catch (const IndexError& e) {
    std::cerr << "sprinter: index error: " << e.what() << '\n';
    return kInput;
  } catch (const ResourceError& e) {
    std::cerr << "sprinter: resource error: " << e.what() << '\n';
    return kResource;
  } catch (const ConvergenceError& e) {
    std::cerr << "sprinter: convergence error: " << e.what() << '\n';
    return kConvergence;
  } catch (const NumericError& e) {
    std::cerr << "sprinter: numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const DegenerateResidualError& e) {
    std::cerr << "sprinter: numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const std::bad_alloc&) {
    std::cerr << "sprinter: resource error: out of memory\n";
    return kResource;
  } catch (const std::exception& e) {
    std::cerr << "sprinter: error: " << e.what() << '\n';
    return kGeneric;
  }
  return kGeneric;
}
