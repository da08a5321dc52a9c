#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "sprinter/model_io.hpp"
#include "support/oracles.hpp"

using namespace sprinter;
using namespace sprinter::pipeline;
using sprinter::testing::random_gaussian;
using sprinter::testing::random_vector;

namespace {

Dataset training(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Dataset x = random_gaussian(60, 7, rng);
  auto y = random_vector(60, rng);
  for (std::size_t i = 0; i < 60; ++i) y[i] = 0.3 * y[i] + x.at(i, 2) - 2.0 * x.at(i, 0) * x.at(i, 5);
  return x.with_response(std::move(y));
}

void expect_reload_exact(const Model& model, const Dataset& fresh) {
  const Model back = model_io::from_json(nlohmann::json::parse(model_io::dump(model)));
  EXPECT_EQ(back.method, model.method);
  EXPECT_EQ(back.p, model.p);
  EXPECT_EQ(back.seed, model.seed);
  EXPECT_EQ(back.coefficients(), model.coefficients());
  EXPECT_EQ(back.predict(fresh), model.predict(fresh));
}

}  // namespace

TEST(ModelIo, RoundTripPredictsBitwise) {
  const Dataset data = training(1);
  std::mt19937_64 rng(2);
  const Dataset fresh = random_gaussian(25, 7, rng);
  SprinterConfig cfg;
  cfg.m = 8;
  expect_reload_exact(fit_sprinter(data, cfg), fresh);
  expect_reload_exact(fit_mel(data, cfg), fresh);
  expect_reload_exact(fit_apl(data, cfg), fresh);
  expect_reload_exact(fit_sis_lasso(data, 12, cfg), fresh);
  expect_reload_exact(fit_oracle_ls(data, {Term::main(2), Term::pair(0, 5)}), fresh);
}

TEST(ModelIo, DocumentFields) {
  const Dataset data = training(3);
  const Model model = fit_sprinter(data, SprinterConfig{});
  const nlohmann::json doc = model_io::to_json(model);
  EXPECT_EQ(doc.at("format"), "sprinter-model");
  EXPECT_EQ(doc.at("version"), 1);
  EXPECT_EQ(doc.at("index_base"), 0);
  EXPECT_EQ(doc.at("tau_order"), "lexicographic");
  EXPECT_EQ(doc.at("method"), "sprinter");
  EXPECT_EQ(doc.at("p"), 7);
  EXPECT_TRUE(doc.contains("lambdas"));
  EXPECT_TRUE(doc.contains("screened"));
  EXPECT_EQ(doc.at("fit").at("coefficients").size(), model.fit.coefficients.size());
}

TEST(ModelIo, MalformedDocumentsAreSchemaErrors) {
  const Dataset data = training(4);
  const nlohmann::json good = model_io::to_json(fit_mel(data, SprinterConfig{}));
  auto wrong_format = good;
  wrong_format["format"] = "something-else";
  EXPECT_THROW(model_io::from_json(wrong_format), SchemaError);
  auto wrong_version = good;
  wrong_version["version"] = 99;
  EXPECT_THROW(model_io::from_json(wrong_version), SchemaError);
  auto missing = good;
  missing.erase("fit");
  EXPECT_THROW(model_io::from_json(missing), SchemaError);
  auto bad_term = good;
  bad_term["fit"]["coefficients"][0]["term"] = nlohmann::json::array({0, 99});
  EXPECT_THROW(model_io::from_json(bad_term), SchemaError);
  EXPECT_THROW(model_io::term_from_json(nlohmann::json("x"), 3), SchemaError);
  EXPECT_EQ(model_io::term_from_json(model_io::term_json(Term::pair(1, 2)), 3), Term::pair(1, 2));
  EXPECT_EQ(model_io::term_from_json(model_io::term_json(Term::main(2)), 3), Term::main(2));
}

TEST(ModelIo, SaveAndLoadFile) {
  const Dataset data = training(5);
  const Model model = fit_sprinter(data, SprinterConfig{});
  const auto path = std::filesystem::temp_directory_path() / "sprinter_model_io_test.json";
  model_io::save(path, model);
  const Model back = model_io::load(path);
  EXPECT_EQ(back.predict(data), model.predict(data));
  std::filesystem::remove(path);
  EXPECT_THROW(model_io::load(path), InputError);
}
