// Command-line surface: gen | calibrate | predict | evaluate | budget |
// verify | report, orchestrating the conformal prediction pipeline.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "coco/errors.hpp"
#include "coco/pipeline.hpp"

namespace {

struct CommonFlags {
  std::string config_path;
  std::vector<uint64_t> seeds;
  std::string method;
  std::optional<double> alpha;
  std::optional<double> beta;
  std::optional<double> budget_labels;
  std::optional<double> budget_concepts;
  std::string mode;
  bool strict = false;
  std::string out;
  std::optional<int> threads;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON run configuration")->required();
  cmd->add_option("--seed", f.seeds, "override the config's seed list");
  cmd->add_option("--method", f.method,
                  "method tag: to|tab|co|cde|rpb|coco|coco-star");
  cmd->add_option("--alpha", f.alpha, "label miscoverage level");
  cmd->add_option("--beta", f.beta, "concept miscoverage level");
  cmd->add_option("--budget-labels", f.budget_labels, "label set size budget");
  cmd->add_option("--budget-concepts", f.budget_concepts, "concept set size budget");
  cmd->add_option("--mode", f.mode, "e-value aggregation: avg|product");
  cmd->add_flag("--strict", f.strict, "reject records outside the knowledge support");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_option("--threads", f.threads, "worker threads for per-record phases");
}

coco::RunConfig resolve(const CommonFlags& f) {
  coco::RunConfig cfg = coco::load_config(f.config_path);
  if (!f.seeds.empty()) cfg.seeds = f.seeds;
  if (!f.method.empty()) cfg.method = coco::method_from_tag(f.method);
  if (f.alpha) cfg.alpha = *f.alpha;
  if (f.beta) cfg.beta = *f.beta;
  if (f.budget_labels || f.budget_concepts) {
    double bl = f.budget_labels.value_or(cfg.budgets ? cfg.budgets->first : 0.0);
    double bc = f.budget_concepts.value_or(cfg.budgets ? cfg.budgets->second : 0.0);
    cfg.budgets = {bl, bc};
  }
  if (!f.mode.empty()) {
    if (f.mode == "avg") cfg.evalue_mode = coco::EAggregation::Average;
    else if (f.mode == "product") cfg.evalue_mode = coco::EAggregation::Product;
    else throw coco::ConfigError("--mode: expected 'avg' or 'product'");
  }
  if (f.strict) cfg.strict = true;
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (f.threads) cfg.threads = *f.threads;
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conformal prediction sets for concept-based classifiers"};
  app.require_subcommand(1);

  CommonFlags gen_f, cal_f, pred_f, eval_f, budget_f, verify_f;
  auto* gen = app.add_subcommand("gen", "generate synthetic record files");
  add_common(gen, gen_f);
  auto* cal = app.add_subcommand("calibrate", "freeze calibration state");
  add_common(cal, cal_f);
  auto* pred = app.add_subcommand("predict", "emit per-record prediction sets");
  add_common(pred, pred_f);
  auto* eval = app.add_subcommand("evaluate", "score prediction sets");
  add_common(eval, eval_f);
  auto* budget = app.add_subcommand("budget", "bootstrap size-budget level selection");
  add_common(budget, budget_f);
  auto* verify = app.add_subcommand("verify", "run the oracle verification suites");
  add_common(verify, verify_f);

  std::vector<std::string> report_inputs;
  std::string report_tsv;
  auto* report = app.add_subcommand("report", "aggregate reports across seeds");
  report->add_option("reports", report_inputs, "report.json files")->required();
  report->add_option("--out", report_tsv, "TSV output path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return coco::cmd_gen(resolve(gen_f));
    if (cal->parsed()) return coco::cmd_calibrate(resolve(cal_f));
    if (pred->parsed()) return coco::cmd_predict(resolve(pred_f));
    if (eval->parsed()) return coco::cmd_evaluate(resolve(eval_f));
    if (budget->parsed()) return coco::cmd_budget(resolve(budget_f));
    if (verify->parsed()) return coco::cmd_verify(resolve(verify_f), std::cout);
    if (report->parsed()) {
      std::vector<std::filesystem::path> paths(report_inputs.begin(),
                                               report_inputs.end());
      std::optional<std::filesystem::path> tsv;
      if (!report_tsv.empty()) tsv = report_tsv;
      return coco::cmd_report(paths, std::cout, tsv);
    }
  } catch (const coco::CapExceeded& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const coco::DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const coco::VerificationFailure& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const coco::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
