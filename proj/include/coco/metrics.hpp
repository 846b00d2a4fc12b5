#pragma once

#include <span>
#include <vector>

#include "coco/knowledge.hpp"
#include "coco/records.hpp"
#include "coco/revision.hpp"

namespace coco {

enum class Side { Labels, Concepts };

struct SideMetrics {
  double coverage = 0.0;
  double mean_size = 0.0;
  double consistency = 0.0;
};

struct Bounds {
  double concept_raw = 0.0;
  double concept_clamped = 0.0;
  double label_raw = 0.0;
  double label_clamped = 0.0;
};

// Coverage lower bounds of the jointly revised sets:
//   concept side: (1-alpha) * delta_ab - beta + joint_failure_concept
//   label side:   (1-beta)  * delta_de - alpha + joint_failure_label
// Clamped values are reported alongside the raw ones.
Bounds theoretical_bounds(double alpha, double beta, double delta_ab,
                          double delta_de, double joint_failure_concept,
                          double joint_failure_label);

double coverage(std::span<const PredictionSets> sets,
                std::span<const ExampleRecord> records, Side side);
double mean_size(std::span<const PredictionSets> sets, Side side);

// Concept side: mean fraction of retained concepts entailing a retained
// label; empty sets contribute 0 via the max(1, |set|) denominator.  Label
// side measures abductive support instead.
double consistency(std::span<const PredictionSets> sets,
                   const KnowledgeTable& table, Side side, uint64_t cap);

// Per-record consistency of a single pair, same convention.
double record_consistency(const PredictionSets& sets, const KnowledgeTable& table,
                          Side side, uint64_t cap);

struct EvaluationReport {
  uint64_t n_records = 0;
  double alpha = 0.0;
  double beta = 0.0;
  SideMetrics labels;
  SideMetrics concepts;
  double delta_ab = 0.0;
  double delta_de = 0.0;
  double joint_failure_label = 0.0;    // P(y* not in raw and not in deduced)
  double joint_failure_concept = 0.0;  // P(c* not in raw and not in abduced)
  Bounds bounds;
  // Raw-set diagnostics
  double raw_label_coverage = 0.0;
  double raw_concept_coverage = 0.0;
  double raw_label_size = 0.0;
  double raw_concept_size = 0.0;
};

// Full evaluation of one run: metrics for the emitted sets plus soundness
// gaps, joint-failure estimates and the resulting coverage bounds computed
// from the raw conformal sets.
EvaluationReport evaluate_run(std::span<const ExampleRecord> records,
                              std::span<const PredictionSets> raw_sets,
                              std::span<const PredictionSets> method_sets,
                              const KnowledgeTable& table, double alpha,
                              double beta, uint64_t cap);

}  // namespace coco
