#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "coco/conformal.hpp"
#include "coco/evalues.hpp"
#include "coco/knowledge.hpp"
#include "coco/metrics.hpp"
#include "coco/records.hpp"
#include "coco/revision.hpp"
#include "coco/synthio.hpp"

namespace coco {

constexpr const char* kToolVersion = "0.1.0";
constexpr uint64_t kDefaultCap = 1'000'000;

enum class CalibrationKind { Quantile, EValue };

struct GeneratorConfig {
  uint64_t n_cal = 0;
  uint64_t n_test = 0;
  PredictorSpec predictor;
};

struct RunConfig {
  KnowledgeProgram program;
  Method method = Method::Joint;
  double alpha = 0.1;
  double beta = 0.1;
  CalibrationKind calibration = CalibrationKind::Quantile;
  EAggregation evalue_mode = EAggregation::Average;
  bool full_vector = false;  // whole-vector concept calibration instead of product
  std::optional<std::pair<double, double>> budgets;  // (labels, concepts)
  BudgetGrid grid;
  BudgetRule budget_rule = BudgetRule::PerSide;
  uint32_t bootstrap_iterations = 100;
  std::vector<uint64_t> seeds{1};
  std::optional<GeneratorConfig> generator;
  std::optional<std::filesystem::path> records_path;
  bool strict = false;
  double split_fraction = 0.2;
  uint64_t cap = kDefaultCap;
  int threads = 1;
  std::filesystem::path out_dir = "runs/out";

  void validate() const;
};

RunConfig load_config(const std::filesystem::path& path);
RunConfig config_from_json_text(const std::string& text);
std::string config_to_json_text(const RunConfig& cfg);

// ----------------------------------------------------------------------------
// Phase primitives (used by the CLI commands and callable directly).
// ----------------------------------------------------------------------------

struct CalibrationState {
  QuantileCalibration quantile;
  EValueCalibration evalue;
};

CalibrationState calibrate_records(std::span<const ExampleRecord> calibration,
                                   const KnowledgeTable& table, double alpha,
                                   double beta, bool full_vector);

struct RecordSets {
  PredictionSets raw;  // conformal sets before any revision
  PredictionSets out;  // sets emitted by the configured method
};

// Pure per record; `threads > 1` splits the records across workers without
// changing any emitted set.
std::vector<RecordSets> predict_records(std::span<const ExampleRecord> records,
                                        const CalibrationState& state,
                                        const RunConfig& cfg,
                                        const KnowledgeTable& table);

EvaluationReport evaluate_records(std::span<const ExampleRecord> records,
                                  std::span<const RecordSets> sets,
                                  const KnowledgeTable& table,
                                  const RunConfig& cfg);

// Deterministic calibration/evaluation split of an external record stream.
std::pair<std::vector<ExampleRecord>, std::vector<ExampleRecord>> split_records(
    std::vector<ExampleRecord> records, double split_fraction, uint64_t seed);

// ----------------------------------------------------------------------------
// Commands. Each is idempotent given identical inputs, writes its outputs
// under out_dir/seed_<s>/ and records digests and timings in manifest.json.
// ----------------------------------------------------------------------------

int cmd_gen(const RunConfig& cfg);
int cmd_calibrate(const RunConfig& cfg);
int cmd_predict(const RunConfig& cfg);
int cmd_evaluate(const RunConfig& cfg);
int cmd_budget(const RunConfig& cfg);
int cmd_verify(const RunConfig& cfg, std::ostream& out);
int cmd_report(const std::vector<std::filesystem::path>& report_files,
               std::ostream& out,
               const std::optional<std::filesystem::path>& tsv_out);

// Verification suites behind cmd_verify: revision fixed point, optimality
// against the greatest-fixed-point oracle, the set-algebra lemmas, and
// e-value validity on exchangeable synthetic data.
struct VerifyCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifySummary {
  std::vector<VerifyCheck> checks;
  bool all_passed() const;
};

VerifySummary run_verification(std::span<const uint64_t> seeds, uint64_t cap);

// FNV-1a content digest used in manifests.
std::string digest_file(const std::filesystem::path& path);
std::string digest_bytes(std::span<const char> bytes);

std::filesystem::path seed_dir(const RunConfig& cfg, uint64_t seed);

// Serialization helpers shared by predict/evaluate and the tests.
std::string prediction_sets_to_line(const std::string& id, const RecordSets& sets);
EvaluationReport report_from_file(const std::filesystem::path& path);
void report_to_file(const EvaluationReport& rep, Method method, uint64_t seed,
                    const std::filesystem::path& json_path,
                    const std::filesystem::path& tsv_path);

}  // namespace coco
