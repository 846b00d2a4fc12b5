#include "coco/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "coco/errors.hpp"
#include "coco/rng.hpp"
#include "json.hpp"

namespace coco {

namespace {

using ordered_json = nlohmann::ordered_json;

// --------------------------------------------------------------------------
// Small helpers
// --------------------------------------------------------------------------

double json_number(const ordered_json& j, const std::string& path) {
  if (j.is_string() && j.get<std::string>() == "inf")
    return std::numeric_limits<double>::infinity();
  if (!j.is_number()) throw ConfigError(path + ": expected a number");
  return j.get<double>();
}

ordered_json number_or_inf(double x) {
  if (std::isinf(x)) return "inf";
  return x;
}

template <typename T>
T get_field(const ordered_json& j, const std::string& key, const std::string& ctx) {
  if (!j.contains(key)) throw ConfigError(ctx + "." + key + ": missing field");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(ctx + "." + key + ": wrong type");
  }
}

template <typename T>
T get_field_or(const ordered_json& j, const std::string& key, const std::string& ctx,
               T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(ctx + "." + key + ": wrong type");
  }
}

template <typename F>
void parallel_for(size_t n, int threads, F&& body) {
  if (threads <= 1 || n < 2) {
    for (size_t i = 0; i < n; ++i) body(i);
    return;
  }
  size_t workers = std::min<size_t>(threads, n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  std::exception_ptr first_error;
  std::mutex error_mutex;
  for (size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      try {
        for (size_t i = w; i < n; i += workers) body(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

// --------------------------------------------------------------------------
// Knowledge program JSON
// --------------------------------------------------------------------------

KnowledgeProgram program_from_json(const ordered_json& j) {
  std::string kind = get_field<std::string>(j, "program", "knowledge");
  if (kind == "digit_sum")
    return DigitSum{get_field<uint32_t>(j, "digits", "knowledge"),
                    get_field<uint32_t>(j, "base", "knowledge")};
  if (kind == "sum_parity")
    return SumParity{get_field<uint32_t>(j, "digits", "knowledge"),
                     get_field<uint32_t>(j, "base", "knowledge")};
  if (kind == "active_count")
    return ActiveCount{get_field<uint32_t>(j, "symptoms", "knowledge")};
  if (kind == "majority_vote") {
    MajorityVote p;
    p.voters = get_field<uint32_t>(j, "voters", "knowledge");
    p.values = get_field<uint32_t>(j, "values", "knowledge");
    p.conflict_label = get_field_or<bool>(j, "conflict_label", "knowledge", true);
    if (j.contains("priority"))
      p.priority = get_field<std::vector<uint32_t>>(j, "priority", "knowledge");
    else
      for (uint32_t v = 0; v < p.values; ++v) p.priority.push_back(v);
    return p;
  }
  if (kind == "attribute_rules") {
    AttributeRules p;
    p.domain_sizes = get_field<std::vector<uint32_t>>(j, "domain_sizes", "knowledge");
    p.num_labels = get_field<uint32_t>(j, "num_labels", "knowledge");
    for (const auto& rj : j.at("rules")) {
      AttributeRule rule;
      rule.labels = get_field<std::vector<uint32_t>>(rj, "labels", "knowledge.rules");
      if (rj.contains("when")) {
        for (const auto& lj : rj.at("when")) {
          AttributeLiteral lit;
          lit.concept_index = get_field<uint32_t>(lj, "concept", "knowledge.rules.when");
          lit.value = get_field_or<uint32_t>(lj, "value", "knowledge.rules.when", 1u);
          lit.negated = get_field_or<bool>(lj, "negated", "knowledge.rules.when", false);
          rule.when.push_back(lit);
        }
      }
      p.rules.push_back(std::move(rule));
    }
    return p;
  }
  if (kind == "table") {
    // Inline rows or an external tabular file.
    if (j.contains("path")) {
      // Resolved lazily at compile time via load_table; stash as ExplicitTable
      // by loading here so the program value is self-contained.
      auto ds = get_field<std::vector<uint32_t>>(j, "domain_sizes", "knowledge");
      auto m = get_field<uint32_t>(j, "num_labels", "knowledge");
      auto path = get_field<std::string>(j, "path", "knowledge");
      KnowledgeTable t = load_table(path, ds, m, kDefaultCap);
      ExplicitTable p;
      p.domain_sizes = ds;
      p.num_labels = m;
      p.rows.resize(t.space().total_size(), std::vector<double>(m, 0.0));
      for (uint64_t i = 0; i < t.space().total_size(); ++i)
        for (auto& [y, w] : t.row(i)) p.rows[i][y] = w;
      return p;
    }
    ExplicitTable p;
    p.domain_sizes = get_field<std::vector<uint32_t>>(j, "domain_sizes", "knowledge");
    p.num_labels = get_field<uint32_t>(j, "num_labels", "knowledge");
    p.rows = get_field<std::vector<std::vector<double>>>(j, "rows", "knowledge");
    return p;
  }
  throw ConfigError("knowledge.program: unknown program '" + kind + "'");
}

ordered_json program_to_json(const KnowledgeProgram& program) {
  ordered_json j;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, DigitSum>) {
          j["program"] = "digit_sum";
          j["digits"] = p.digits;
          j["base"] = p.base;
        } else if constexpr (std::is_same_v<T, SumParity>) {
          j["program"] = "sum_parity";
          j["digits"] = p.digits;
          j["base"] = p.base;
        } else if constexpr (std::is_same_v<T, ActiveCount>) {
          j["program"] = "active_count";
          j["symptoms"] = p.symptoms;
        } else if constexpr (std::is_same_v<T, MajorityVote>) {
          j["program"] = "majority_vote";
          j["voters"] = p.voters;
          j["values"] = p.values;
          j["priority"] = p.priority;
          j["conflict_label"] = p.conflict_label;
        } else if constexpr (std::is_same_v<T, AttributeRules>) {
          j["program"] = "attribute_rules";
          j["domain_sizes"] = p.domain_sizes;
          j["num_labels"] = p.num_labels;
          ordered_json rules = ordered_json::array();
          for (const auto& r : p.rules) {
            ordered_json rj;
            ordered_json when = ordered_json::array();
            for (const auto& lit : r.when) {
              ordered_json lj;
              lj["concept"] = lit.concept_index;
              lj["value"] = lit.value;
              lj["negated"] = lit.negated;
              when.push_back(lj);
            }
            rj["when"] = when;
            rj["labels"] = r.labels;
            rules.push_back(rj);
          }
          j["rules"] = rules;
        } else {
          j["program"] = "table";
          j["domain_sizes"] = p.domain_sizes;
          j["num_labels"] = p.num_labels;
          j["rows"] = p.rows;
        }
      },
      program);
  return j;
}

// --------------------------------------------------------------------------
// RunConfig JSON
// --------------------------------------------------------------------------

PredictorSpec predictor_from_json(const ordered_json& j) {
  PredictorSpec spec;
  spec.temperature = get_field_or<double>(j, "temperature", "generator", 1.0);
  spec.logit_noise = get_field_or<double>(j, "logit_noise", "generator", 0.0);
  std::string prior = get_field_or<std::string>(j, "prior", "generator", "uniform");
  if (prior == "uniform") spec.prior = PredictorSpec::Prior::UniformFeasible;
  else if (prior == "label_uniform") spec.prior = PredictorSpec::Prior::LabelUniform;
  else throw ConfigError("generator.prior: expected 'uniform' or 'label_uniform'");
  if (j.contains("shortcuts")) {
    for (const auto& sj : j.at("shortcuts")) {
      uint32_t c = get_field<uint32_t>(sj, "concept", "generator.shortcuts");
      auto perm = get_field<std::vector<uint32_t>>(sj, "permutation", "generator.shortcuts");
      if (spec.shortcut.size() <= c) spec.shortcut.resize(c + 1);
      spec.shortcut[c] = std::move(perm);
    }
  }
  if (j.contains("confusion")) {
    for (const auto& cj : j.at("confusion")) {
      uint32_t c = get_field<uint32_t>(cj, "concept", "generator.confusion");
      auto rows = get_field<std::vector<std::vector<double>>>(cj, "rows", "generator.confusion");
      if (spec.confusion.size() <= c) spec.confusion.resize(c + 1);
      spec.confusion[c] = std::move(rows);
    }
  }
  return spec;
}

ordered_json predictor_to_json(const PredictorSpec& spec) {
  ordered_json j;
  j["temperature"] = spec.temperature;
  j["logit_noise"] = spec.logit_noise;
  j["prior"] = spec.prior == PredictorSpec::Prior::UniformFeasible ? "uniform"
                                                                   : "label_uniform";
  if (!spec.shortcut.empty()) {
    ordered_json arr = ordered_json::array();
    for (uint32_t c = 0; c < spec.shortcut.size(); ++c) {
      if (!spec.shortcut[c]) continue;
      ordered_json sj;
      sj["concept"] = c;
      sj["permutation"] = *spec.shortcut[c];
      arr.push_back(sj);
    }
    j["shortcuts"] = arr;
  }
  if (!spec.confusion.empty()) {
    ordered_json arr = ordered_json::array();
    for (uint32_t c = 0; c < spec.confusion.size(); ++c) {
      if (!spec.confusion[c]) continue;
      ordered_json cj;
      cj["concept"] = c;
      cj["rows"] = *spec.confusion[c];
      arr.push_back(cj);
    }
    j["confusion"] = arr;
  }
  return j;
}

RunConfig config_from_json(const ordered_json& j) {
  RunConfig cfg;
  if (!j.contains("knowledge")) throw ConfigError("knowledge: missing field");
  cfg.program = program_from_json(j.at("knowledge"));
  cfg.method = method_from_tag(get_field_or<std::string>(j, "method", "config", "coco"));
  cfg.alpha = get_field_or<double>(j, "alpha", "config", 0.1);
  cfg.beta = get_field_or<double>(j, "beta", "config", 0.1);
  std::string cal = get_field_or<std::string>(j, "calibration", "config",
                                              cfg.method == Method::JointBudget
                                                  ? "evalue" : "quantile");
  if (cal == "quantile") cfg.calibration = CalibrationKind::Quantile;
  else if (cal == "evalue") cfg.calibration = CalibrationKind::EValue;
  else throw ConfigError("calibration: expected 'quantile' or 'evalue'");
  std::string mode = get_field_or<std::string>(j, "evalue_mode", "config", "avg");
  if (mode == "avg") cfg.evalue_mode = EAggregation::Average;
  else if (mode == "product") cfg.evalue_mode = EAggregation::Product;
  else throw ConfigError("evalue_mode: expected 'avg' or 'product'");
  cfg.full_vector = get_field_or<bool>(j, "full_vector", "config", false);
  if (j.contains("budgets") && !j.at("budgets").is_null()) {
    const auto& b = j.at("budgets");
    cfg.budgets = {get_field<double>(b, "labels", "budgets"),
                   get_field<double>(b, "concepts", "budgets")};
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    if (g.contains("alphas"))
      cfg.grid.alphas = get_field<std::vector<double>>(g, "alphas", "grid");
    if (g.contains("betas"))
      cfg.grid.betas = get_field<std::vector<double>>(g, "betas", "grid");
  }
  std::string rule = get_field_or<std::string>(j, "budget_rule", "config", "per-side");
  if (rule == "per-side") cfg.budget_rule = BudgetRule::PerSide;
  else if (rule == "lex") cfg.budget_rule = BudgetRule::Lexicographic;
  else throw ConfigError("budget_rule: expected 'per-side' or 'lex'");
  cfg.bootstrap_iterations =
      get_field_or<uint32_t>(j, "bootstrap_iterations", "config", 100u);
  cfg.seeds = get_field_or<std::vector<uint64_t>>(j, "seeds", "config", {1});
  if (j.contains("generator") && !j.at("generator").is_null()) {
    const auto& g = j.at("generator");
    GeneratorConfig gen;
    gen.n_cal = get_field<uint64_t>(g, "n_cal", "generator");
    gen.n_test = get_field<uint64_t>(g, "n_test", "generator");
    gen.predictor = predictor_from_json(g);
    cfg.generator = std::move(gen);
  }
  if (j.contains("records") && !j.at("records").is_null()) {
    const auto& r = j.at("records");
    cfg.records_path = get_field<std::string>(r, "path", "records");
    cfg.strict = get_field_or<bool>(r, "strict", "records", false);
  }
  cfg.split_fraction = get_field_or<double>(j, "split_fraction", "config", 0.2);
  cfg.cap = get_field_or<uint64_t>(j, "cap", "config", kDefaultCap);
  cfg.threads = get_field_or<int>(j, "threads", "config", 1);
  cfg.out_dir = get_field_or<std::string>(j, "out", "config", "runs/out");
  cfg.validate();
  return cfg;
}

ordered_json config_to_json(const RunConfig& cfg) {
  ordered_json j;
  j["knowledge"] = program_to_json(cfg.program);
  j["method"] = method_tag(cfg.method);
  j["alpha"] = cfg.alpha;
  j["beta"] = cfg.beta;
  j["calibration"] =
      cfg.calibration == CalibrationKind::Quantile ? "quantile" : "evalue";
  j["evalue_mode"] = cfg.evalue_mode == EAggregation::Average ? "avg" : "product";
  j["full_vector"] = cfg.full_vector;
  if (cfg.budgets) {
    j["budgets"]["labels"] = cfg.budgets->first;
    j["budgets"]["concepts"] = cfg.budgets->second;
  }
  j["grid"]["alphas"] = cfg.grid.alphas;
  j["grid"]["betas"] = cfg.grid.betas;
  j["budget_rule"] = cfg.budget_rule == BudgetRule::PerSide ? "per-side" : "lex";
  j["bootstrap_iterations"] = cfg.bootstrap_iterations;
  j["seeds"] = cfg.seeds;
  if (cfg.generator) {
    j["generator"] = predictor_to_json(cfg.generator->predictor);
    j["generator"]["n_cal"] = cfg.generator->n_cal;
    j["generator"]["n_test"] = cfg.generator->n_test;
  }
  if (cfg.records_path) {
    j["records"]["path"] = cfg.records_path->string();
    j["records"]["strict"] = cfg.strict;
  }
  j["split_fraction"] = cfg.split_fraction;
  j["cap"] = cfg.cap;
  j["threads"] = cfg.threads;
  j["out"] = cfg.out_dir.string();
  return j;
}

// --------------------------------------------------------------------------
// Set serialization for predictions.jsonl
// --------------------------------------------------------------------------

ordered_json concept_set_to_json(const ConceptSet& s) {
  ordered_json j;
  if (s.kind() == ConceptSet::Kind::Product) {
    j["kind"] = "product";
    j["factors"] = s.factors();
  } else {
    j["kind"] = "explicit";
    j["members"] = s.members();
  }
  return j;
}

ConceptSet concept_set_from_json(const ordered_json& j, const ConceptSpace& space) {
  std::string kind = get_field<std::string>(j, "kind", "concept_set");
  if (kind == "product")
    return ConceptSet::make_product(
        space, get_field<std::vector<std::vector<uint32_t>>>(j, "factors", "concept_set"));
  return ConceptSet::make_explicit(
      space, get_field<std::vector<uint64_t>>(j, "members", "concept_set"));
}

ordered_json label_set_to_json(const LabelSet& s) { return s.values(); }

LabelSet label_set_from_json(const ordered_json& j, uint32_t universe) {
  LabelSet out(universe);
  for (uint32_t y : j.get<std::vector<uint32_t>>()) out.insert(y);
  return out;
}

// --------------------------------------------------------------------------
// Manifest
// --------------------------------------------------------------------------

void update_manifest(const RunConfig& cfg, uint64_t seed, const std::string& phase,
                     double seconds,
                     const std::vector<std::pair<std::string, std::string>>& outputs,
                     ordered_json embedded = ordered_json()) {
  auto dir = seed_dir(cfg, seed);
  std::filesystem::create_directories(dir);
  auto path = dir / "manifest.json";
  ordered_json m;
  if (std::filesystem::exists(path)) {
    std::ifstream in(path);
    try {
      in >> m;
    } catch (const nlohmann::json::exception&) {
      m = ordered_json::object();
    }
  }
  m["tool_version"] = kToolVersion;
  m["seed"] = seed;
  ordered_json cj = config_to_json(cfg);
  std::string cj_text = cj.dump();
  m["config"] = std::move(cj);
  m["config_digest"] = digest_bytes(std::span<const char>(cj_text.data(), cj_text.size()));
  ordered_json pj;
  pj["seconds"] = seconds;
  for (const auto& [name, digest] : outputs) pj["outputs"][name] = digest;
  if (!embedded.is_null()) pj["state"] = std::move(embedded);
  m["phases"][phase] = pj;
  std::ofstream out(path);
  out << m.dump(2) << '\n';
}

struct PhaseTimer {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
        .count();
  }
};

// --------------------------------------------------------------------------
// Phase data loading
// --------------------------------------------------------------------------

std::pair<std::vector<ExampleRecord>, std::vector<ExampleRecord>> load_split(
    const RunConfig& cfg, uint64_t seed, const KnowledgeTable& table) {
  auto dir = seed_dir(cfg, seed);
  auto cal_path = dir / "cal.jsonl";
  auto test_path = dir / "test.jsonl";
  if (std::filesystem::exists(cal_path) && std::filesystem::exists(test_path)) {
    auto cal = read_records(cal_path);
    auto test = read_records(test_path);
    validate_records(cal, table, cfg.strict, cfg.cap);
    validate_records(test, table, cfg.strict, cfg.cap);
    return {std::move(cal), std::move(test)};
  }
  if (cfg.records_path) {
    auto records = ingest(*cfg.records_path, table, cfg.strict, cfg.cap);
    return split_records(std::move(records), cfg.split_fraction, seed);
  }
  throw MissingInput("no generated records under " + dir.string() +
                     " and no records.path configured; run `gen` first");
}

}  // namespace

// --------------------------------------------------------------------------
// Public config API
// --------------------------------------------------------------------------

void RunConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha: must lie in (0, 1)");
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("beta: must lie in (0, 1)");
  if (seeds.empty()) throw ConfigError("seeds: must be nonempty");
  if (!(split_fraction > 0.0 && split_fraction < 1.0))
    throw ConfigError("split_fraction: must lie in (0, 1)");
  if (cap == 0) throw ConfigError("cap: must be positive");
  if (threads < 1) throw ConfigError("threads: must be >= 1");
  if (method == Method::JointBudget && calibration != CalibrationKind::EValue)
    throw ConfigError("coco-star requires e-value calibration");
  if (budgets) {
    if (!(budgets->first > 0.0) || !(budgets->second > 0.0))
      throw ConfigError("budgets: must be positive");
  }
  if (generator) {
    if (generator->n_cal == 0) throw ConfigError("generator.n_cal: must be >= 1");
    if (generator->n_test == 0) throw ConfigError("generator.n_test: must be >= 1");
  }
  for (double a : grid.alphas)
    if (!(a > 0.0 && a < 1.0)) throw ConfigError("grid.alphas: levels must lie in (0, 1)");
  for (double b : grid.betas)
    if (!(b > 0.0 && b < 1.0)) throw ConfigError("grid.betas: levels must lie in (0, 1)");
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

RunConfig config_from_json_text(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return config_from_json(j);
}

std::string config_to_json_text(const RunConfig& cfg) {
  return config_to_json(cfg).dump(2);
}

// --------------------------------------------------------------------------
// Calibration / prediction / evaluation
// --------------------------------------------------------------------------

CalibrationState calibrate_records(std::span<const ExampleRecord> calibration,
                                   const KnowledgeTable& table, double alpha,
                                   double beta, bool full_vector) {
  if (calibration.empty()) throw EmptyCalibration("calibrate: no records");
  const ConceptSpace& space = table.space();
  const uint32_t k = space.arity();

  std::vector<double> label_scores;
  std::vector<std::vector<double>> concept_scores(k);
  std::vector<double> full_scores;
  label_scores.reserve(calibration.size());
  for (const auto& r : calibration) {
    if (!r.label_probs)
      throw MissingInput("calibrate: record lacks label probabilities");
    if (!r.c_star) throw MissingInput("calibrate: record lacks ground-truth concepts");
    label_scores.push_back(nonconformity_score((*r.label_probs)[r.y_star]));
    for (uint32_t j = 0; j < k; ++j)
      concept_scores[j].push_back(
          nonconformity_score(r.concept_probs[j][(*r.c_star)[j]]));
    if (full_vector)
      full_scores.push_back(full_vector_score(r.concept_distribution(), *r.c_star));
  }

  CalibrationState state;
  state.quantile.n = calibration.size();
  state.quantile.alpha = alpha;
  state.quantile.betas = bonferroni_split(beta, k);
  state.quantile.q_label = calibrate_quantile(label_scores, alpha);
  state.quantile.q_concepts.resize(k);
  for (uint32_t j = 0; j < k; ++j)
    state.quantile.q_concepts[j] =
        calibrate_quantile(concept_scores[j], state.quantile.betas[j]);
  if (full_vector)
    state.quantile.q_full_vector = calibrate_quantile(full_scores, beta);

  state.evalue.n = calibration.size();
  state.evalue.label_score_sum = 0.0;
  for (double s : label_scores) state.evalue.label_score_sum += s;
  state.evalue.concept_score_sums.assign(k, 0.0);
  for (uint32_t j = 0; j < k; ++j)
    for (double s : concept_scores[j]) state.evalue.concept_score_sums[j] += s;
  return state;
}

std::vector<RecordSets> predict_records(std::span<const ExampleRecord> records,
                                        const CalibrationState& state,
                                        const RunConfig& cfg,
                                        const KnowledgeTable& table) {
  const ConceptSpace& space = table.space();
  std::vector<RecordSets> out(records.size());
  parallel_for(records.size(), cfg.threads, [&](size_t i) {
    const auto& r = records[i];
    if (!r.label_probs)
      throw MissingInput("predict: record lacks label probabilities");
    LabelSet raw_labels(table.labels().num_labels);
    ConceptSet raw_concepts = ConceptSet::make_empty(space);
    if (cfg.calibration == CalibrationKind::Quantile) {
      // Quantile thresholds are frozen at their calibration levels; e-value
      // levels, by contrast, apply at prediction time.
      double frozen_beta = 0.0;
      for (double b : state.quantile.betas) frozen_beta += b;
      if (state.quantile.alpha != cfg.alpha ||
          std::abs(frozen_beta - cfg.beta) > 1e-12)
        throw ConfigError("quantile calibration was frozen at alpha " +
                          std::to_string(state.quantile.alpha) + ", beta " +
                          std::to_string(frozen_beta) +
                          "; re-run calibrate to change levels");
      raw_labels = conformal_label_set(*r.label_probs, state.quantile.q_label);
      if (cfg.full_vector) {
        if (!state.quantile.q_full_vector)
          throw MissingInput(
              "full_vector prediction needs a full-vector calibration threshold; "
              "re-run calibrate with full_vector enabled");
        raw_concepts = full_vector_concept_set(
            r.concept_distribution(), space, *state.quantile.q_full_vector, cfg.cap);
      } else {
        std::vector<std::vector<uint32_t>> factors(space.arity());
        for (uint32_t j = 0; j < space.arity(); ++j)
          factors[j] = per_concept_set(r.concept_probs[j], state.quantile.q_concepts[j]);
        raw_concepts = product_concept_set(space, std::move(factors));
      }
    } else {
      raw_labels = evalue_label_set(*r.label_probs, state.evalue, cfg.alpha);
      raw_concepts = evalue_concept_set(r.concept_distribution(), state.evalue,
                                        cfg.beta, cfg.evalue_mode, cfg.cap);
    }
    out[i].raw = PredictionSets{raw_labels, raw_concepts, Method::Raw};
    out[i].out = apply_method(cfg.method, r, raw_labels, raw_concepts, table, cfg.cap);
  });
  return out;
}

EvaluationReport evaluate_records(std::span<const ExampleRecord> records,
                                  std::span<const RecordSets> sets,
                                  const KnowledgeTable& table,
                                  const RunConfig& cfg) {
  std::vector<PredictionSets> raw, outs;
  raw.reserve(sets.size());
  outs.reserve(sets.size());
  for (const auto& s : sets) {
    raw.push_back(s.raw);
    outs.push_back(s.out);
  }
  return evaluate_run(records, raw, outs, table, cfg.alpha, cfg.beta, cfg.cap);
}

std::pair<std::vector<ExampleRecord>, std::vector<ExampleRecord>> split_records(
    std::vector<ExampleRecord> records, double split_fraction, uint64_t seed) {
  if (records.size() < 2)
    throw EmptyDataset("split_records: need at least two records");
  Rng rng(mix_seed(seed, 0x5911fULL));
  for (size_t i = records.size() - 1; i > 0; --i)
    std::swap(records[i], records[rng.below(i + 1)]);
  size_t n_cal = static_cast<size_t>(split_fraction * records.size());
  n_cal = std::clamp<size_t>(n_cal, 1, records.size() - 1);
  std::vector<ExampleRecord> cal(records.begin(), records.begin() + n_cal);
  std::vector<ExampleRecord> test(records.begin() + n_cal, records.end());
  return {std::move(cal), std::move(test)};
}

std::filesystem::path seed_dir(const RunConfig& cfg, uint64_t seed) {
  return cfg.out_dir / ("seed_" + std::to_string(seed));
}

// --------------------------------------------------------------------------
// Digests
// --------------------------------------------------------------------------

std::string digest_bytes(std::span<const char> bytes) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string digest_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file for digest: " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  std::string s = ss.str();
  return digest_bytes(std::span<const char>(s.data(), s.size()));
}

// --------------------------------------------------------------------------
// Commands
// --------------------------------------------------------------------------

int cmd_gen(const RunConfig& cfg) {
  if (!cfg.generator)
    throw ConfigError("generator: required for the gen command");
  KnowledgeTable table = compile(cfg.program, cfg.cap);
  for (uint64_t seed : cfg.seeds) {
    PhaseTimer timer;
    auto [cal, test] = generate(table, cfg.generator->predictor,
                                cfg.generator->n_cal, cfg.generator->n_test, seed,
                                cfg.cap);
    auto dir = seed_dir(cfg, seed);
    std::filesystem::create_directories(dir);
    write_records(dir / "cal.jsonl", cal);
    write_records(dir / "test.jsonl", test);
    update_manifest(cfg, seed, "gen", timer.seconds(),
                    {{"cal.jsonl", digest_file(dir / "cal.jsonl")},
                     {"test.jsonl", digest_file(dir / "test.jsonl")}});
  }
  return 0;
}

namespace {

ordered_json calibration_to_json(const CalibrationState& state) {
  ordered_json j;
  j["n"] = state.quantile.n;
  j["alpha"] = state.quantile.alpha;
  j["betas"] = state.quantile.betas;
  j["q_label"] = number_or_inf(state.quantile.q_label);
  ordered_json qc = ordered_json::array();
  for (double q : state.quantile.q_concepts) qc.push_back(number_or_inf(q));
  j["q_concepts"] = qc;
  if (state.quantile.q_full_vector)
    j["q_full_vector"] = number_or_inf(*state.quantile.q_full_vector);
  j["e_label_score_sum"] = state.evalue.label_score_sum;
  j["e_concept_score_sums"] = state.evalue.concept_score_sums;
  return j;
}

CalibrationState calibration_from_json(const ordered_json& j) {
  CalibrationState state;
  state.quantile.n = get_field<uint64_t>(j, "n", "calibration");
  state.quantile.alpha = get_field<double>(j, "alpha", "calibration");
  state.quantile.betas = get_field<std::vector<double>>(j, "betas", "calibration");
  state.quantile.q_label = json_number(j.at("q_label"), "calibration.q_label");
  for (const auto& q : j.at("q_concepts"))
    state.quantile.q_concepts.push_back(json_number(q, "calibration.q_concepts"));
  if (j.contains("q_full_vector"))
    state.quantile.q_full_vector =
        json_number(j.at("q_full_vector"), "calibration.q_full_vector");
  state.evalue.n = state.quantile.n;
  state.evalue.label_score_sum =
      get_field<double>(j, "e_label_score_sum", "calibration");
  state.evalue.concept_score_sums =
      get_field<std::vector<double>>(j, "e_concept_score_sums", "calibration");
  return state;
}

}  // namespace

int cmd_calibrate(const RunConfig& cfg) {
  KnowledgeTable table = compile(cfg.program, cfg.cap);
  for (uint64_t seed : cfg.seeds) {
    PhaseTimer timer;
    auto [cal, test] = load_split(cfg, seed, table);
    (void)test;
    CalibrationState state =
        calibrate_records(cal, table, cfg.alpha, cfg.beta, cfg.full_vector);
    auto dir = seed_dir(cfg, seed);
    std::filesystem::create_directories(dir);
    ordered_json cal_json = calibration_to_json(state);
    std::ofstream out(dir / "calibration.json");
    out << cal_json.dump(2) << '\n';
    out.close();
    update_manifest(cfg, seed, "calibrate", timer.seconds(),
                    {{"calibration.json", digest_file(dir / "calibration.json")}},
                    cal_json);
  }
  return 0;
}

std::string prediction_sets_to_line(const std::string& id, const RecordSets& sets) {
  ordered_json j;
  j["id"] = id;
  j["method"] = method_tag(sets.out.method);
  j["raw_labels"] = label_set_to_json(sets.raw.labels);
  j["raw_concepts"] = concept_set_to_json(sets.raw.concepts);
  j["labels"] = label_set_to_json(sets.out.labels);
  j["concepts"] = concept_set_to_json(sets.out.concepts);
  return j.dump();
}

int cmd_predict(const RunConfig& cfg) {
  KnowledgeTable table = compile(cfg.program, cfg.cap);
  for (uint64_t seed : cfg.seeds) {
    PhaseTimer timer;
    auto dir = seed_dir(cfg, seed);
    auto cal_file = dir / "calibration.json";
    if (!std::filesystem::exists(cal_file))
      throw MissingInput("missing " + cal_file.string() + "; run `calibrate` first");
    std::ifstream in(cal_file);
    ordered_json cj;
    in >> cj;
    CalibrationState state = calibration_from_json(cj);
    auto [cal, test] = load_split(cfg, seed, table);
    (void)cal;
    auto sets = predict_records(test, state, cfg, table);
    std::ofstream out(dir / "predictions.jsonl");
    for (size_t i = 0; i < sets.size(); ++i)
      out << prediction_sets_to_line(test[i].id, sets[i]) << '\n';
    out.close();
    update_manifest(cfg, seed, "predict", timer.seconds(),
                    {{"predictions.jsonl", digest_file(dir / "predictions.jsonl")}});
  }
  return 0;
}

namespace {

std::vector<RecordSets> read_predictions(const std::filesystem::path& path,
                                         const KnowledgeTable& table) {
  std::ifstream in(path);
  if (!in) throw MissingInput("cannot open " + path.string() + "; run `predict` first");
  std::vector<RecordSets> out;
  std::string line;
  long lineno = 0;
  const uint32_t m = table.labels().num_labels;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad prediction line: ") + e.what(), lineno);
    }
    RecordSets s;
    s.raw.method = Method::Raw;
    s.raw.labels = label_set_from_json(j.at("raw_labels"), m);
    s.raw.concepts = concept_set_from_json(j.at("raw_concepts"), table.space());
    s.out.method = method_from_tag(j.at("method").get<std::string>());
    s.out.labels = label_set_from_json(j.at("labels"), m);
    s.out.concepts = concept_set_from_json(j.at("concepts"), table.space());
    out.push_back(std::move(s));
  }
  return out;
}

ordered_json report_to_json(const EvaluationReport& rep, Method method,
                            uint64_t seed) {
  ordered_json j;
  j["method"] = method_tag(method);
  j["seed"] = seed;
  j["n_records"] = rep.n_records;
  j["alpha"] = rep.alpha;
  j["beta"] = rep.beta;
  j["concepts"]["consistency"] = rep.concepts.consistency;
  j["concepts"]["size"] = rep.concepts.mean_size;
  j["concepts"]["coverage"] = rep.concepts.coverage;
  j["labels"]["consistency"] = rep.labels.consistency;
  j["labels"]["size"] = rep.labels.mean_size;
  j["labels"]["coverage"] = rep.labels.coverage;
  j["delta_ab"] = rep.delta_ab;
  j["delta_de"] = rep.delta_de;
  j["joint_failure_label"] = rep.joint_failure_label;
  j["joint_failure_concept"] = rep.joint_failure_concept;
  j["bound_label"] = rep.bounds.label_clamped;
  j["bound_label_raw"] = rep.bounds.label_raw;
  j["bound_concept"] = rep.bounds.concept_clamped;
  j["bound_concept_raw"] = rep.bounds.concept_raw;
  j["raw_label_coverage"] = rep.raw_label_coverage;
  j["raw_concept_coverage"] = rep.raw_concept_coverage;
  j["raw_label_size"] = rep.raw_label_size;
  j["raw_concept_size"] = rep.raw_concept_size;
  return j;
}

}  // namespace

void report_to_file(const EvaluationReport& rep, Method method, uint64_t seed,
                    const std::filesystem::path& json_path,
                    const std::filesystem::path& tsv_path) {
  std::ofstream out(json_path);
  out << report_to_json(rep, method, seed).dump(2) << '\n';
  out.close();
  // Flat single-row table for spreadsheet import.
  std::ofstream tsv(tsv_path);
  tsv << "method\tseed\tconcept_consistency\tconcept_size\tconcept_coverage"
      << "\tlabel_consistency\tlabel_size\tlabel_coverage"
      << "\tdelta_ab\tdelta_de\tjoint_failure_concept\tjoint_failure_label"
      << "\tbound_concept\tbound_label\n";
  tsv << method_tag(method) << '\t' << seed << '\t' << rep.concepts.consistency
      << '\t' << rep.concepts.mean_size << '\t' << rep.concepts.coverage << '\t'
      << rep.labels.consistency << '\t' << rep.labels.mean_size << '\t'
      << rep.labels.coverage << '\t' << rep.delta_ab << '\t' << rep.delta_de << '\t'
      << rep.joint_failure_concept << '\t' << rep.joint_failure_label << '\t'
      << rep.bounds.concept_clamped << '\t' << rep.bounds.label_clamped << '\n';
}

EvaluationReport report_from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open report: " + path.string());
  ordered_json j;
  in >> j;
  EvaluationReport rep;
  rep.n_records = j.value("n_records", 0ULL);
  rep.alpha = j.value("alpha", 0.0);
  rep.beta = j.value("beta", 0.0);
  rep.concepts.consistency = j.at("concepts").at("consistency").get<double>();
  rep.concepts.mean_size = j.at("concepts").at("size").get<double>();
  rep.concepts.coverage = j.at("concepts").at("coverage").get<double>();
  rep.labels.consistency = j.at("labels").at("consistency").get<double>();
  rep.labels.mean_size = j.at("labels").at("size").get<double>();
  rep.labels.coverage = j.at("labels").at("coverage").get<double>();
  rep.delta_ab = j.value("delta_ab", 0.0);
  rep.delta_de = j.value("delta_de", 0.0);
  rep.joint_failure_label = j.value("joint_failure_label", 0.0);
  rep.joint_failure_concept = j.value("joint_failure_concept", 0.0);
  rep.bounds.label_clamped = j.value("bound_label", 0.0);
  rep.bounds.concept_clamped = j.value("bound_concept", 0.0);
  rep.bounds.label_raw = j.value("bound_label_raw", 0.0);
  rep.bounds.concept_raw = j.value("bound_concept_raw", 0.0);
  rep.raw_label_coverage = j.value("raw_label_coverage", 0.0);
  rep.raw_concept_coverage = j.value("raw_concept_coverage", 0.0);
  rep.raw_label_size = j.value("raw_label_size", 0.0);
  rep.raw_concept_size = j.value("raw_concept_size", 0.0);
  return rep;
}

int cmd_evaluate(const RunConfig& cfg) {
  KnowledgeTable table = compile(cfg.program, cfg.cap);
  for (uint64_t seed : cfg.seeds) {
    PhaseTimer timer;
    auto dir = seed_dir(cfg, seed);
    auto [cal, test] = load_split(cfg, seed, table);
    (void)cal;
    auto sets = read_predictions(dir / "predictions.jsonl", table);
    if (sets.size() != test.size())
      throw DimensionMismatch("predictions/test record count mismatch");
    EvaluationReport rep = evaluate_records(test, sets, table, cfg);
    report_to_file(rep, cfg.method, seed, dir / "report.json", dir / "report.tsv");
    update_manifest(cfg, seed, "evaluate", timer.seconds(),
                    {{"report.json", digest_file(dir / "report.json")},
                     {"report.tsv", digest_file(dir / "report.tsv")}});
  }
  return 0;
}

int cmd_budget(const RunConfig& cfg) {
  if (!cfg.budgets)
    throw ConfigError("budgets: required for the budget command");
  KnowledgeTable table = compile(cfg.program, cfg.cap);
  for (uint64_t seed : cfg.seeds) {
    PhaseTimer timer;
    auto [cal, test] = load_split(cfg, seed, table);
    BudgetSelection sel = budget_select(cal, test, table.space(), cfg.grid,
                                        cfg.budgets->first, cfg.budgets->second,
                                        cfg.bootstrap_iterations, seed,
                                        cfg.evalue_mode, cfg.cap, cfg.budget_rule);
    ordered_json j;
    j["budget_labels"] = sel.budget_labels;
    j["budget_concepts"] = sel.budget_concepts;
    j["iterations"] = sel.iterations;
    j["mode"] = sel.mode == EAggregation::Average ? "avg" : "product";
    j["mean_alpha"] = sel.mean_alpha;
    j["mean_beta"] = sel.mean_beta;
    j["target_label_coverage"] = sel.target_label_coverage;
    j["target_concept_coverage"] = sel.target_concept_coverage;
    j["mean_label_coverage"] = sel.mean_label_coverage;
    j["mean_concept_coverage"] = sel.mean_concept_coverage;
    j["mean_label_size"] = sel.mean_label_size;
    j["mean_concept_size"] = sel.mean_concept_size;
    j["infeasible_alpha_iterations"] = sel.infeasible_alpha_iterations;
    j["infeasible_beta_iterations"] = sel.infeasible_beta_iterations;
    ordered_json its = ordered_json::array();
    for (const auto& it : sel.per_iteration) {
      ordered_json ij;
      ij["alpha"] = it.alpha;
      ij["beta"] = it.beta;
      ij["alpha_feasible"] = it.alpha_feasible;
      ij["beta_feasible"] = it.beta_feasible;
      ij["label_size"] = it.mean_label_size;
      ij["concept_size"] = it.mean_concept_size;
      ij["label_coverage"] = it.label_coverage;
      ij["concept_coverage"] = it.concept_coverage;
      its.push_back(ij);
    }
    j["per_iteration"] = its;
    auto dir = seed_dir(cfg, seed);
    std::filesystem::create_directories(dir);
    std::ofstream out(dir / "budget.json");
    out << j.dump(2) << '\n';
    out.close();
    update_manifest(cfg, seed, "budget", timer.seconds(),
                    {{"budget.json", digest_file(dir / "budget.json")}}, j);
  }
  return 0;
}

int cmd_verify(const RunConfig& cfg, std::ostream& out) {
  VerifySummary summary = run_verification(cfg.seeds, cfg.cap);
  for (const auto& c : summary.checks)
    out << (c.passed ? "PASS" : "FAIL") << "  " << c.name
        << (c.detail.empty() ? "" : "  (" + c.detail + ")") << '\n';
  if (!summary.all_passed()) return 4;
  out << "all verification suites passed\n";
  return 0;
}

int cmd_report(const std::vector<std::filesystem::path>& report_files,
               std::ostream& out,
               const std::optional<std::filesystem::path>& tsv_out) {
  if (report_files.empty()) throw MissingInput("report: no report files given");
  struct Row {
    std::vector<double> concept_const, concept_size, concept_cov;
    std::vector<double> label_const, label_size, label_cov;
  };
  std::map<std::string, Row> by_method;
  for (const auto& given : report_files) {
    std::ifstream in(given);
    if (!in) throw DataError("cannot open report: " + given.string());
    ordered_json j;
    in >> j;
    if (j.contains("phases")) {
      // a run manifest: the report sits next to it
      auto sibling = given.parent_path() / "report.json";
      std::ifstream rin(sibling);
      if (!rin)
        throw MissingInput("manifest given but no report at " + sibling.string());
      rin >> j;
    }
    std::string method = j.value("method", std::string("?"));
    Row& row = by_method[method];
    row.concept_const.push_back(j.at("concepts").at("consistency").get<double>());
    row.concept_size.push_back(j.at("concepts").at("size").get<double>());
    row.concept_cov.push_back(j.at("concepts").at("coverage").get<double>());
    row.label_const.push_back(j.at("labels").at("consistency").get<double>());
    row.label_size.push_back(j.at("labels").at("size").get<double>());
    row.label_cov.push_back(j.at("labels").at("coverage").get<double>());
  }
  auto mean_std = [](const std::vector<double>& xs) {
    double mean = 0.0;
    for (double x : xs) mean += x;
    mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - mean) * (x - mean);
    if (xs.size() > 1) var /= static_cast<double>(xs.size() - 1);
    return std::pair<double, double>(mean, std::sqrt(var));
  };
  auto fmt = [&](const std::vector<double>& xs) {
    auto [m, s] = mean_std(xs);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f ± %.2f", m, s);
    return std::string(buf);
  };
  out << "method      concepts: const / size / cov          labels: const / size / cov\n";
  std::ostringstream tsv;
  tsv << "method\tconcept_consistency_mean\tconcept_consistency_std"
      << "\tconcept_size_mean\tconcept_size_std\tconcept_coverage_mean\tconcept_coverage_std"
      << "\tlabel_consistency_mean\tlabel_consistency_std\tlabel_size_mean\tlabel_size_std"
      << "\tlabel_coverage_mean\tlabel_coverage_std\tseeds\n";
  for (const auto& [method, row] : by_method) {
    char line[256];
    std::snprintf(line, sizeof line, "%-10s  %s / %s / %s    %s / %s / %s\n",
                  method.c_str(), fmt(row.concept_const).c_str(),
                  fmt(row.concept_size).c_str(), fmt(row.concept_cov).c_str(),
                  fmt(row.label_const).c_str(), fmt(row.label_size).c_str(),
                  fmt(row.label_cov).c_str());
    out << line;
    auto dump = [&](const std::vector<double>& xs) {
      auto [m, s] = mean_std(xs);
      tsv << '\t' << m << '\t' << s;
    };
    tsv << method;
    dump(row.concept_const);
    dump(row.concept_size);
    dump(row.concept_cov);
    dump(row.label_const);
    dump(row.label_size);
    dump(row.label_cov);
    tsv << '\t' << row.concept_const.size() << '\n';
  }
  if (tsv_out) {
    std::ofstream f(*tsv_out);
    f << tsv.str();
  }
  return 0;
}

// --------------------------------------------------------------------------
// Verification suites
// --------------------------------------------------------------------------

namespace {

struct RandomInstance {
  KnowledgeTable table;
  ConceptSet concepts;
  LabelSet labels;
};

KnowledgeTable random_table(Rng& rng, bool deterministic_rows) {
  uint32_t k = 1 + static_cast<uint32_t>(rng.below(3));
  std::vector<uint32_t> ds(k);
  for (auto& d : ds) d = 1 + static_cast<uint32_t>(rng.below(4));
  uint32_t m = 1 + static_cast<uint32_t>(rng.below(6));
  ConceptSpace space(ds);
  std::vector<KnowledgeTable::Row> rows(space.total_size());
  for (auto& row : rows) {
    if (!deterministic_rows && rng.uniform() < 0.15) continue;  // infeasible row
    uint32_t support = deterministic_rows
                           ? 1
                           : 1 + static_cast<uint32_t>(rng.below(std::min(3u, m)));
    std::vector<uint32_t> labels;
    while (labels.size() < support) {
      uint32_t y = static_cast<uint32_t>(rng.below(m));
      if (std::find(labels.begin(), labels.end(), y) == labels.end())
        labels.push_back(y);
    }
    std::sort(labels.begin(), labels.end());
    double w = 1.0 / support;
    for (uint32_t y : labels) row.emplace_back(y, w);
  }
  return KnowledgeTable(space, LabelSpace{m}, std::move(rows));
}

RandomInstance random_instance(Rng& rng) {
  RandomInstance inst{random_table(rng, false), ConceptSet(), LabelSet()};
  const ConceptSpace& space = inst.table.space();
  if (rng.uniform() < 0.5) {
    std::vector<uint64_t> members;
    for (uint64_t i = 0; i < space.total_size(); ++i)
      if (rng.uniform() < 0.35) members.push_back(i);
    inst.concepts = ConceptSet::make_explicit(space, std::move(members));
  } else {
    std::vector<std::vector<uint32_t>> factors(space.arity());
    for (uint32_t j = 0; j < space.arity(); ++j)
      for (uint32_t v = 0; v < space.domain_size(j); ++v)
        if (rng.uniform() < 0.6) factors[j].push_back(v);
    inst.concepts = ConceptSet::make_product(space, std::move(factors));
  }
  inst.labels = LabelSet(inst.table.labels().num_labels);
  for (uint32_t y = 0; y < inst.table.labels().num_labels; ++y)
    if (rng.uniform() < 0.4) inst.labels.insert(y);
  return inst;
}

bool revised_equal(const Revised& a, const Revised& b, uint64_t cap) {
  return a.labels == b.labels && a.concepts.same_members(b.concepts, cap);
}

VerifyCheck check_fixed_point(uint64_t seed, uint64_t cap) {
  for (uint32_t i = 0; i < 1000; ++i) {
    Rng rng(mix_seed(seed, 0xF1 + i));
    RandomInstance inst = random_instance(rng);
    Revised once = revise(inst.concepts, inst.labels, inst.table, cap);
    Revised twice = revise(once.concepts, once.labels, inst.table, cap);
    if (!revised_equal(once, twice, cap))
      return {"revision fixed point", false, "instance " + std::to_string(i)};
  }
  return {"revision fixed point", true, "1000 randomized instances"};
}

VerifyCheck check_optimality(uint64_t seed, uint64_t cap) {
  for (uint32_t i = 0; i < 1000; ++i) {
    Rng rng(mix_seed(seed, 0x0B + i));
    RandomInstance inst = random_instance(rng);
    Revised fast = revise(inst.concepts, inst.labels, inst.table, cap);
    Revised oracle =
        oracle_largest_consistent_pair(inst.concepts, inst.labels, inst.table, cap);
    if (!revised_equal(fast, oracle, cap))
      return {"revision optimality vs oracle", false, "instance " + std::to_string(i)};
    Revised alt = revise_via_abduction(inst.concepts, inst.labels, inst.table, cap);
    if (!revised_equal(fast, alt, cap))
      return {"revision route equivalence", false, "instance " + std::to_string(i)};
  }
  return {"revision optimality vs oracle", true, "1000 randomized instances"};
}

VerifyCheck check_lemmas(uint64_t seed, uint64_t cap) {
  for (uint32_t i = 0; i < 1000; ++i) {
    Rng rng(mix_seed(seed, 0x1E + i));
    KnowledgeTable table = random_table(rng, false);
    uint32_t m = table.labels().num_labels;
    LabelSet A(m), B(m);
    for (uint32_t y = 0; y < m; ++y) {
      if (rng.uniform() < 0.45) A.insert(y);
      if (rng.uniform() < 0.45) B.insert(y);
    }
    auto inter = table.abduce(A.intersect(B), cap);
    auto a = table.abduce(A, cap);
    auto b = table.abduce(B, cap);
    for (uint64_t c : inter) {
      if (!std::binary_search(a.begin(), a.end(), c) ||
          !std::binary_search(b.begin(), b.end(), c))
        return {"abduction intersection lemma", false, "instance " + std::to_string(i)};
    }
    // Round trip over a random subset of the feasible support.
    auto feasible = table.feasible_indices();
    std::vector<uint64_t> subset;
    for (uint64_t c : feasible)
      if (rng.uniform() < 0.5) subset.push_back(c);
    ConceptSet gamma = ConceptSet::make_explicit(table.space(), subset);
    LabelSet image = table.deduce_image(gamma, cap);
    auto back = table.abduce(image, cap);
    for (uint64_t c : subset)
      if (!std::binary_search(back.begin(), back.end(), c))
        return {"abduction round-trip lemma", false, "instance " + std::to_string(i)};
  }
  // Converse of the intersection lemma must fail on a tie: one row deduces
  // {0, 1}, A = {0}, B = {1}.
  {
    ConceptSpace space({1});
    std::vector<KnowledgeTable::Row> rows{{{0, 0.5}, {1, 0.5}}};
    KnowledgeTable tie(space, LabelSpace{2}, std::move(rows));
    LabelSet A(2), B(2);
    A.insert(0);
    B.insert(1);
    bool in_both = !tie.abduce(A, 16).empty() && !tie.abduce(B, 16).empty();
    bool in_inter = !tie.abduce(A.intersect(B), 16).empty();
    if (!in_both || in_inter)
      return {"abduction lemmas", false, "tie counterexample did not behave"};
  }
  return {"abduction lemmas", true, "1000 randomized instances + tie counterexample"};
}

VerifyCheck check_soundness_implication(uint64_t seed, uint64_t cap) {
  for (uint32_t i = 0; i < 200; ++i) {
    Rng rng(mix_seed(seed, 0x5D + i));
    KnowledgeTable table = random_table(rng, true);  // deterministic rows only
    for (uint64_t c : table.feasible_indices()) {
      uint32_t y = table.deduce(c)[0];
      LabelSet single(table.labels().num_labels);
      single.insert(y);
      auto pre = table.abduce(single, cap);
      if (!std::binary_search(pre.begin(), pre.end(), c))
        return {"deductive soundness implies abductive", false,
                "instance " + std::to_string(i)};
    }
  }
  return {"deductive soundness implies abductive", true, "200 deterministic tables"};
}

VerifyCheck check_evalue_validity(std::span<const uint64_t> seeds, uint64_t cap) {
  KnowledgeTable table = compile(DigitSum{2, 6}, cap);
  for (uint64_t seed : seeds) {
    PredictorSpec spec;
    spec.temperature = 1.0;
    spec.logit_noise = 1.0;
    auto [cal, test] = generate(table, spec, 300, 2000, seed, cap);
    CalibrationState state = calibrate_records(cal, table, 0.1, 0.1, false);
    double sum_l = 0.0, sumsq_l = 0.0, sum_c = 0.0, sumsq_c = 0.0;
    for (const auto& r : test) {
      double el = label_evalue(*r.label_probs, state.evalue, r.y_star);
      double ec = concept_evalue(r.concept_distribution(), state.evalue, *r.c_star,
                                 EAggregation::Average);
      sum_l += el;
      sumsq_l += el * el;
      sum_c += ec;
      sumsq_c += ec * ec;
    }
    double n = static_cast<double>(test.size());
    double mean_l = sum_l / n, mean_c = sum_c / n;
    double se_l = std::sqrt((sumsq_l / n - mean_l * mean_l) / n);
    double se_c = std::sqrt((sumsq_c / n - mean_c * mean_c) / n);
    if (mean_l > 1.0 + 3.0 * se_l || mean_c > 1.0 + 3.0 * se_c)
      return {"e-value validity", false,
              "seed " + std::to_string(seed) + ": mean label e " + std::to_string(mean_l) +
                  ", mean concept e " + std::to_string(mean_c)};
  }
  return {"e-value validity", true,
          std::to_string(seeds.size()) + " seeds, mean e <= 1 + 3*SE on both sides"};
}

}  // namespace

bool VerifySummary::all_passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

VerifySummary run_verification(std::span<const uint64_t> seeds, uint64_t cap) {
  uint64_t seed0 = seeds.empty() ? 1 : seeds.front();
  VerifySummary s;
  s.checks.push_back(check_fixed_point(seed0, cap));
  s.checks.push_back(check_optimality(seed0, cap));
  s.checks.push_back(check_lemmas(seed0, cap));
  s.checks.push_back(check_soundness_implication(seed0, cap));
  s.checks.push_back(check_evalue_validity(seeds, cap));
  return s;
}

}  // namespace coco
