#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "commands.hpp"
#include "json.hpp"
#include "manifest.hpp"
#include "sprinter/io.hpp"
#include "table.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// A scratch directory per test; commands run with it as the working directory.
class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("sprinter_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int run(const std::string& args) const {
    const std::string cmd = "cd '" + dir_.string() + "' && '" SPRINTER_EXE "' " + args + " > out.log 2> err.log";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string file(const std::string& name) const { return sprinter::io::read_file(dir_ / name); }
  json manifest(const std::string& name) const { return json::parse(file(name)); }
  std::vector<double> column(const std::string& name) const {
    std::istringstream in(file(name));
    std::string line;
    std::getline(in, line);
    std::vector<double> out;
    while (std::getline(in, line)) out.push_back(std::stod(line));
    return out;
  }

  fs::path dir_;
};

}  // namespace

TEST(CliHelpers, Sha256KnownVectors) {
  EXPECT_EQ(sprinter::cli::sha256_text("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sprinter::cli::sha256_text(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(CliHelpers, LogLogSlope) {
  EXPECT_NEAR(sprinter::cli::log_log_slope({1, 2, 4, 8}, {3, 12, 48, 192}), 2.0, 1e-12);
  EXPECT_NEAR(sprinter::cli::log_log_slope({10, 100}, {5, 50}), 1.0, 1e-12);
  EXPECT_THROW(sprinter::cli::log_log_slope({1}, {1}), sprinter::ConfigError);
}

TEST(CliHelpers, VolatileColumnsLeaveTheReproducibleText) {
  sprinter::cli::Table t;
  t.column("a");
  t.column("seconds", true);
  t.add_row({"1", "0.5"});
  EXPECT_EQ(t.text(), "a\tseconds\n1\t0.5\n");
  EXPECT_EQ(t.reproducible_text(), "a\n1\n");
  EXPECT_THROW(t.add_row({"1"}), sprinter::Error);
}

TEST_F(Cli, TreeDesignHas63Features) {
  ASSERT_EQ(run("simulate --design tree --depth 5 --n 100 --out t.csv"), 0);
  std::string header;
  std::getline(std::istringstream(file("t.csv")) >> std::ws, header);
  EXPECT_EQ(std::count(header.begin(), header.end(), ','), 63);  // 63 features and y
  const json truth = json::parse(file("t.csv.truth.json"));
  EXPECT_EQ(truth["p"], 63);
  EXPECT_EQ(truth["snr_convention"], "squared");
  EXPECT_TRUE(truth["mir"].is_number());
}

TEST_F(Cli, SimulateIsByteIdentical) {
  const std::string flags = "simulate --design gaussian --p 400 --n 100 --structure mixed --snr 3 --seed 7 --test-n 20";
  ASSERT_EQ(run(flags + " --out a.csv"), 0);
  ASSERT_EQ(run(flags + " --out b.csv"), 0);
  EXPECT_EQ(file("a.csv"), file("b.csv"));
  EXPECT_EQ(file("a.csv.truth.json"), file("b.csv.truth.json"));
  EXPECT_EQ(file("a.csv.test.csv"), file("b.csv.test.csv"));
  EXPECT_NE(file("a.csv"), file("a.csv.test.csv"));
  ASSERT_EQ(run("simulate --p 400 --n 100 --seed 8 --out c.csv"), 0);
  EXPECT_NE(file("a.csv"), file("c.csv"));
}

TEST_F(Cli, FitIsDeterministicAcrossRunsAndThreads) {
  ASSERT_EQ(run("simulate --p 60 --n 80 --seed 3 --out d.csv"), 0);
  ASSERT_EQ(run("fit --data d.csv --method sprinter --m 100 --cv 5 --seed 1 --threads 1 --out m1.json"), 0);
  ASSERT_EQ(run("fit --data d.csv --method sprinter --m 100 --cv 5 --seed 1 --threads 4 --out m2.json"), 0);
  EXPECT_EQ(file("m1.json"), file("m2.json"));
  const json m = manifest("m1.json.manifest.json");
  EXPECT_EQ(m["subcommand"], "fit");
  EXPECT_EQ(m["options"]["m"], "100");
  EXPECT_EQ(m["options"]["cv"], 5);
  EXPECT_EQ(m["options"]["n_lambda"], 100);
  EXPECT_EQ(m["threads"], 1);
  EXPECT_EQ(m["inputs"][0]["path"], "d.csv");
  EXPECT_EQ(m["inputs"][0]["sha256"], sprinter::cli::sha256_file(dir_ / "d.csv"));
  EXPECT_EQ(m["outputs"][0]["sha256"], sprinter::cli::sha256_file(dir_ / "m1.json"));
  EXPECT_GT(m["peak_heap_bytes"].get<double>(), 0);
  EXPECT_GE(m["timing"]["wall_seconds"].get<double>(), m["timing"]["fit_seconds"].get<double>());
  EXPECT_GT(m["results"]["lambda"].get<double>(), 0);
}

TEST_F(Cli, EtaZeroMatchesAplThroughTheCli) {
  ASSERT_EQ(run("simulate --p 20 --n 50 --seed 11 --out wide.csv"), 0);
  // Keep the first 10 features and the response.
  std::istringstream in(file("wide.csv"));
  std::ofstream narrow(dir_ / "d.csv");
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    for (int j = 0; j < 10; ++j) narrow << cells[j] << ',';
    narrow << cells.back() << '\n';
  }
  narrow.close();
  ASSERT_EQ(run("fit --data d.csv --method sprinter --eta 0 --out s.json"), 0);
  ASSERT_EQ(run("fit --data d.csv --method apl --out a.json"), 0);
  ASSERT_EQ(run("predict --model s.json --data d.csv --out s.pred"), 0);
  ASSERT_EQ(run("predict --model a.json --data d.csv --out a.pred"), 0);
  const auto ys = column("s.pred"), ya = column("a.pred");
  ASSERT_EQ(ys.size(), 50u);
  for (std::size_t i = 0; i < ys.size(); ++i) EXPECT_NEAR(ys[i], ya[i], 1e-6);
}

TEST_F(Cli, ReplayReproducesOutputsAndDetectsChangedInputs) {
  ASSERT_EQ(run("simulate --p 40 --n 60 --seed 2 --out d.csv"), 0);
  ASSERT_EQ(run("fit --data d.csv --seed 4 --out m.json --metrics m.tsv"), 0);
  ASSERT_EQ(run("replay --manifest m.json.manifest.json --output-dir again"), 0) << file("out.log");
  EXPECT_EQ(file("m.json"), file("again/m.json"));
  ASSERT_EQ(run("replay --manifest d.csv.manifest.json --output-dir again_sim"), 0) << file("out.log");
  EXPECT_EQ(file("d.csv"), file("again_sim/d.csv"));
  ASSERT_EQ(run("cv --data d.csv --seed 4 --out cv.tsv"), 0);
  ASSERT_EQ(run("replay --manifest cv.tsv.manifest.json --output-dir again_cv"), 0) << file("out.log");

  sprinter::io::write_file(dir_ / "d.csv", file("d.csv") + "\n");
  EXPECT_EQ(run("replay --manifest m.json.manifest.json --output-dir stale"), 6);
}

TEST_F(Cli, CrossValidationTableHasBothSteps) {
  ASSERT_EQ(run("simulate --p 30 --n 60 --seed 5 --out d.csv"), 0);
  ASSERT_EQ(run("cv --data d.csv --out cv.tsv"), 0);
  std::istringstream in(file("cv.tsv"));
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "step\tindex\tlambda\tcv_mean\tcv_se\tselected");
  int step1 = 0, step3 = 0, selected = 0;
  while (std::getline(in, line)) {
    step1 += line.rfind("step1\t", 0) == 0;
    step3 += line.rfind("step3\t", 0) == 0;
    selected += line.back() == '1';
  }
  EXPECT_GE(step1, 5);
  EXPECT_GE(step3, 5);
  EXPECT_EQ(selected, 2);
}

TEST_F(Cli, SeparateFeatureAndResponseFiles) {
  sprinter::io::write_file(dir_ / "x.tsv", "a\tb\n1\t2\n2\t1\n3\t5\n4\t4\n5\t7\n6\t5\n7\t9\n8\t8\n");
  sprinter::io::write_file(dir_ / "y.csv", "y\n1\n2\n3\n4\n5\n6\n7\n8\n");
  ASSERT_EQ(run("fit --x x.tsv --y y.csv --method mel --cv 2 --out m.json"), 0) << file("err.log");
  ASSERT_EQ(run("predict --model m.json --x x.tsv --no-response --out p.csv"), 0) << file("err.log");
  EXPECT_EQ(column("p.csv").size(), 8u);
  sprinter::io::write_file(dir_ / "short.csv", "y\n1\n2\n");
  EXPECT_EQ(run("fit --x x.tsv --y short.csv --out m.json"), 3);
}

TEST_F(Cli, ExitCodesByErrorClass) {
  ASSERT_EQ(run("simulate --p 400 --n 100 --seed 1 --out d.csv"), 0);
  EXPECT_EQ(run("fit --nonsense"), 2);
  EXPECT_EQ(run("fit --data d.csv --method bogus --out m.json"), 2);
  EXPECT_EQ(run("fit --data d.csv --m 5 --eta 1 --out m.json"), 2);
  EXPECT_EQ(run("simulate --p 10 --structure mixed --out small.csv"), 2);  // structure needs p >= 20
  EXPECT_EQ(run("fit --data missing.csv --out m.json"), 3);
  sprinter::io::write_file(dir_ / "bad.csv", "a,b,y\n1,2,3\n4,oops,6\n");
  EXPECT_EQ(run("fit --data bad.csv --out m.json"), 3);
  EXPECT_NE(file("err.log").find("bad.csv:3"), std::string::npos) << file("err.log");
  const std::string cmd = "cd '" + dir_.string() + "' && SPRINTER_MEMORY_BUDGET=1M '" SPRINTER_EXE
                          "' fit --data d.csv --method apl --out m.json > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  EXPECT_EQ(WEXITSTATUS(status), 4);
  EXPECT_EQ(run("fit --data d.csv --max-iter 1 --out slow.json"), 5);
  EXPECT_TRUE(fs::exists(dir_ / "slow.json"));
  ASSERT_EQ(run("fit --data d.csv --method mel --out mel.json"), 0);
  sprinter::io::write_file(dir_ / "narrow.csv", "a,b,y\n1,2,3\n4,5,6\n");
  EXPECT_EQ(run("predict --model mel.json --data narrow.csv --out p.csv"), 3);
}

TEST_F(Cli, OracleCheckSuites) {
  EXPECT_EQ(run("oracle-check --suite bernoulli --out b.tsv"), 0);
  EXPECT_NE(file("b.tsv").find("PASS"), std::string::npos);
  EXPECT_EQ(file("b.tsv").find("FAIL"), std::string::npos);
  EXPECT_EQ(run("oracle-check --suite gaussian --mc-n 1000000 --out g.tsv"), 0);
  EXPECT_NE(file("g.tsv").find("var_z"), std::string::npos);
  EXPECT_EQ(run("oracle-check --suite moments --mc-n 100000 --out m.tsv"), 0);
  // A Monte Carlo sample this small cannot meet the 1% tolerance, so the suite must report failure.
  EXPECT_EQ(run("oracle-check --suite gaussian --mc-n 100 --out tiny.tsv"), 6);
  EXPECT_EQ(run("oracle-check --suite nope --out x.tsv"), 2);
}

TEST_F(Cli, BenchSmokeAtP400) {
  ASSERT_EQ(run("bench --p-grid 400 --reps 1 --methods sprinter --test-n 200 --out bench.tsv"), 0) << file("err.log");
  std::istringstream in(file("bench.tsv"));
  std::string header, row;
  std::getline(in, header);
  std::getline(in, row);
  EXPECT_NE(header.find("peak_heap_bytes"), std::string::npos);
  EXPECT_NE(header.find("pairs_scanned"), std::string::npos);
  EXPECT_EQ(row.rfind("400\t0\tsprinter\tok\t80200\t", 0), 0u) << row;
  EXPECT_NE(row.find("\t80200\t100\t"), std::string::npos) << row;  // pairs scanned, peak tracked = m = n
  const json m = manifest("bench.tsv.manifest.json");
  EXPECT_EQ(m["options"]["p_grid"], "400");
  ASSERT_EQ(m["results"]["per_p"].size(), 1u);
}

TEST_F(Cli, BenchDefaultGridIsTheStandardOne) {
  sprinter::cli::BenchOptions o;
  EXPECT_EQ(o.p_grid, "100,200,400,1000,2000");
}

TEST_F(Cli, RiboflavinSplitNeedsSeedAndUses30And31Rows) {
  ASSERT_EQ(run("simulate --p 30 --n 71 --seed 9 --out r.csv"), 0);
  EXPECT_EQ(run("fit --data r.csv --protocol riboflavin-split --methods mel --out split.tsv"), 2);
  ASSERT_EQ(run("fit --data r.csv --protocol riboflavin-split --seed 5 --methods mel,sprinter --out split.tsv"), 0)
      << file("err.log");
  std::istringstream in(file("split.tsv"));
  std::string line;
  std::getline(in, line);
  int rows = 0;
  while (std::getline(in, line)) {
    ++rows;
    const bool a_train = line.find("\tA\tB\t30\t31\t") != std::string::npos;
    const bool b_train = line.find("\tB\tA\t31\t30\t") != std::string::npos;
    EXPECT_TRUE(a_train || b_train) << line;
  }
  EXPECT_EQ(rows, 4);
  EXPECT_EQ(manifest("split.tsv.manifest.json")["results"]["unused_rows"], 10);
  ASSERT_EQ(run("replay --manifest split.tsv.manifest.json --output-dir again"), 0) << file("out.log");
  ASSERT_EQ(run("simulate --p 30 --n 60 --seed 9 --out few.csv"), 0);
  EXPECT_EQ(run("fit --data few.csv --protocol riboflavin-split --seed 5 --out x.tsv"), 2);
}

TEST_F(Cli, OracleLeastSquaresUsesTheTruthFile) {
  ASSERT_EQ(run("simulate --p 30 --n 200 --seed 12 --out d.csv"), 0);
  ASSERT_EQ(run("fit --data d.csv --method oracle_ls --truth d.csv.truth.json --out o.json"), 0) << file("err.log");
  const json truth = json::parse(file("d.csv.truth.json"));
  const json model = json::parse(file("o.json"));
  EXPECT_EQ(model["method"], "oracle_ls");
  EXPECT_EQ(model["fit"]["coefficients"].size(), truth["support"].size());
  EXPECT_EQ(run("fit --data d.csv --method oracle_ls --out o.json"), 2);
}
