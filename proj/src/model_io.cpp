#include "sprinter/model_io.hpp"

#include <string>

#include "sprinter/io.hpp"

namespace sprinter::model_io {

using nlohmann::json;

json term_json(const Term& t) {
  if (t.is_main()) return json::array({t.j});
  return json::array({t.j, t.k});
}

Term term_from_json(const json& v, std::size_t p) {
  if (!v.is_array() || v.empty() || v.size() > 2) throw SchemaError("model: a term must be [j] or [j, k]");
  for (const auto& e : v) {
    if (!e.is_number_unsigned()) throw SchemaError("model: term indices must be non-negative integers");
    if (e.get<std::uint64_t>() >= p) {
      throw SchemaError("model: term index " + std::to_string(e.get<std::uint64_t>()) + " out of range for p=" +
                        std::to_string(p));
    }
  }
  const auto j = v[0].get<std::size_t>();
  return v.size() == 1 ? Term::main(j) : Term::pair(j, v[1].get<std::size_t>());
}

namespace {

json screened_json(const std::vector<screen::ScreenScore>& selected) {
  json out = json::array();
  for (const auto& s : selected) out.push_back({{"term", term_json(s.pair)}, {"ell", s.ell}, {"score", s.score}});
  return out;
}

json fit_json(const lasso::LassoFit& fit, const std::vector<Term>& terms) {
  json coefs = json::array();
  for (const auto& [c, b] : fit.coefficients) coefs.push_back({{"term", term_json(terms.at(c))}, {"value", b}});
  return {{"lambda", fit.lambda},
          {"intercept", fit.intercept},
          {"coefficients", std::move(coefs)},
          {"n_iterations", fit.n_iterations},
          {"converged", fit.converged},
          {"kkt_violation", fit.kkt_violation}};
}

template <class T>
T required(const json& doc, const char* key) {
  if (!doc.contains(key)) throw SchemaError(std::string("model: missing field '") + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception&) {
    throw SchemaError(std::string("model: field '") + key + "' has the wrong type");
  }
}

// Rebuilds a fit; its terms are appended to `terms` and coefficient ids
// point into it.
lasso::LassoFit fit_from_json(const json& doc, std::size_t p, std::vector<Term>& terms) {
  lasso::LassoFit fit;
  fit.lambda = required<double>(doc, "lambda");
  fit.intercept = required<double>(doc, "intercept");
  fit.n_iterations = doc.value("n_iterations", std::size_t{0});
  fit.converged = doc.value("converged", true);
  fit.kkt_violation = doc.value("kkt_violation", 0.0);
  const json coefs = required<json>(doc, "coefficients");
  if (!coefs.is_array()) throw SchemaError("model: 'coefficients' must be an array");
  for (const auto& c : coefs) {
    const Term t = term_from_json(required<json>(c, "term"), p);
    fit.coefficients.emplace_back(terms.size(), required<double>(c, "value"));
    terms.push_back(t);
  }
  return fit;
}

}  // namespace

json to_json(const pipeline::Model& model) {
  json doc;
  doc["format"] = kFormat;
  doc["version"] = kVersion;
  doc["method"] = pipeline::method_name(model.method);
  doc["p"] = model.p;
  doc["tau_order"] = "lexicographic";
  doc["index_base"] = 0;
  doc["seed"] = model.seed;
  doc["design_columns"] = model.terms.size();
  doc["fit"] = fit_json(model.fit, model.terms);
  doc["lambdas"] = model.lambdas;
  doc["best_index"] = model.best_index;
  if (model.cv) doc["cv"] = {{"mean", model.cv->mean}, {"se", model.cv->se}};
  doc["screened"] = screened_json(model.screened);
  doc["warnings"] = model.warnings;
  if (model.steps) {
    const auto& s = *model.steps;
    json steps;
    steps["step1"] = fit_json(s.step1, s.step1_terms);
    steps["step1_columns"] = s.step1_terms.size();
    steps["step1_lambdas"] = s.step1_lambdas;
    steps["screening_skipped"] = s.screening_skipped;
    steps["screen_mode"] = s.screened.mode == screen::Mode::top_m ? "top_m" : "threshold";
    steps["pass_stats"] = {{"pairs_scanned", s.screened.stats.pairs_scanned},
                           {"peak_tracked", s.screened.stats.peak_tracked},
                           {"zero_variance", s.screened.stats.zero_variance}};
    steps["residual_sd"] = s.screened.residual_sd;
    doc["steps"] = std::move(steps);
  }
  return doc;
}

pipeline::Model from_json(const json& doc) {
  if (!doc.is_object()) throw SchemaError("model: document is not an object");
  if (doc.value("format", std::string()) != kFormat) throw SchemaError("model: not a sprinter model file");
  if (required<int>(doc, "version") != kVersion) throw SchemaError("model: unsupported version");
  if (doc.value("tau_order", std::string("lexicographic")) != "lexicographic" || doc.value("index_base", 0) != 0) {
    throw SchemaError("model: unsupported index convention");
  }
  pipeline::Model model;
  try {
    model.method = pipeline::parse_method(required<std::string>(doc, "method"));
  } catch (const ConfigError& e) {
    throw SchemaError(std::string("model: ") + e.what());
  }
  model.p = required<std::size_t>(doc, "p");
  model.seed = doc.value("seed", std::uint64_t{0});
  model.fit = fit_from_json(required<json>(doc, "fit"), model.p, model.terms);
  model.lambdas = doc.value("lambdas", std::vector<double>{});
  model.best_index = doc.value("best_index", std::size_t{0});
  if (doc.contains("cv")) {
    lasso::CvErrors cv;
    cv.mean = required<std::vector<double>>(doc["cv"], "mean");
    cv.se = required<std::vector<double>>(doc["cv"], "se");
    model.cv = std::move(cv);
  }
  for (const auto& s : doc.value("screened", json::array())) {
    model.screened.push_back({term_from_json(required<json>(s, "term"), model.p), required<std::uint64_t>(s, "ell"),
                              required<double>(s, "score")});
  }
  model.warnings = doc.value("warnings", std::vector<std::string>{});
  if (doc.contains("steps")) {
    const json& s = doc["steps"];
    pipeline::SprinterSteps steps;
    steps.step1 = fit_from_json(required<json>(s, "step1"), model.p, steps.step1_terms);
    steps.step1_lambdas = s.value("step1_lambdas", std::vector<double>{});
    steps.screening_skipped = s.value("screening_skipped", false);
    steps.screened.mode = s.value("screen_mode", std::string("top_m")) == "threshold" ? screen::Mode::threshold
                                                                                     : screen::Mode::top_m;
    steps.screened.selected = model.screened;
    if (s.contains("pass_stats")) {
      const json& ps = s["pass_stats"];
      steps.screened.stats.pairs_scanned = ps.value("pairs_scanned", std::uint64_t{0});
      steps.screened.stats.peak_tracked = ps.value("peak_tracked", std::size_t{0});
      steps.screened.stats.zero_variance = ps.value("zero_variance", std::uint64_t{0});
    }
    steps.screened.residual_sd = s.value("residual_sd", 0.0);
    model.steps = std::move(steps);
  }
  return model;
}

std::string dump(const pipeline::Model& model) { return to_json(model).dump(2) + "\n"; }

void save(const std::filesystem::path& path, const pipeline::Model& model) { io::write_file(path, dump(model)); }

pipeline::Model load(const std::filesystem::path& path) {
  const std::string text = io::read_file(path);
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(path.string() + ": not valid JSON (" + e.what() + ")");
  }
  return from_json(doc);
}

}  // namespace sprinter::model_io
