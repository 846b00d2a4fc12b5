#pragma once

// Shared fixtures: knowledge constructions and small pipeline drivers used
// across the unit and acceptance suites.

#include <cstdint>
#include <vector>

#include "coco/knowledge.hpp"
#include "coco/pipeline.hpp"
#include "coco/synthio.hpp"

namespace coco::testing {

// Ten classes over three binary concepts: classes 0..5 carry unique
// signatures, {6,7} and {8,9} each share one, so four of ten classes sit in
// two-way shared pairs.
inline AttributeRules shared_pair_rules() {
  AttributeRules p;
  p.domain_sizes = {2, 2, 2};
  p.num_labels = 10;
  auto signature = [](uint32_t bits) {
    std::vector<AttributeLiteral> when;
    for (uint32_t j = 0; j < 3; ++j)
      when.push_back(AttributeLiteral{j, (bits >> j) & 1u, false});
    return when;
  };
  for (uint32_t sig = 0; sig < 6; ++sig)
    p.rules.push_back(AttributeRule{signature(sig), {sig}});
  p.rules.push_back(AttributeRule{signature(6), {6, 7}});
  p.rules.push_back(AttributeRule{signature(7), {8, 9}});
  return p;
}

// Parity-preserving digit permutation with six fixed points:
// (0 2)(1 3), digits 4..9 fixed.
inline std::vector<uint32_t> parity_preserving_permutation() {
  return {2, 3, 0, 1, 4, 5, 6, 7, 8, 9};
}

struct RegimeRun {
  std::vector<ExampleRecord> cal;
  std::vector<ExampleRecord> test;
  std::vector<RecordSets> sets;
  EvaluationReport report;
};

// gen -> calibrate -> predict -> evaluate in memory.
inline RegimeRun run_regime(const KnowledgeTable& table, const PredictorSpec& spec,
                            uint64_t n_cal, uint64_t n_test, uint64_t seed,
                            Method method, double alpha = 0.1, double beta = 0.1,
                            CalibrationKind calibration = CalibrationKind::Quantile,
                            uint64_t cap = kDefaultCap) {
  RegimeRun run;
  std::tie(run.cal, run.test) = generate(table, spec, n_cal, n_test, seed, cap);
  CalibrationState state = calibrate_records(run.cal, table, alpha, beta, false);
  RunConfig cfg;
  cfg.program = ExplicitTable{};  // unused by predict/evaluate
  cfg.method = method;
  cfg.alpha = alpha;
  cfg.beta = beta;
  cfg.calibration = calibration;
  cfg.cap = cap;
  run.sets = predict_records(run.test, state, cfg, table);
  run.report = evaluate_records(run.test, run.sets, table, cfg);
  return run;
}

}  // namespace coco::testing
