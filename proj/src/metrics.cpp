#include "coco/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "coco/errors.hpp"

namespace coco {

Bounds theoretical_bounds(double alpha, double beta, double delta_ab,
                          double delta_de, double joint_failure_concept,
                          double joint_failure_label) {
  for (double x : {alpha, beta, delta_ab, delta_de, joint_failure_concept,
                   joint_failure_label})
    if (!(x >= 0.0 && x <= 1.0))
      throw DataError("theoretical_bounds: arguments must lie in [0, 1]");
  Bounds b;
  b.concept_raw = (1.0 - alpha) * delta_ab - beta + joint_failure_concept;
  b.label_raw = (1.0 - beta) * delta_de - alpha + joint_failure_label;
  b.concept_clamped = std::clamp(b.concept_raw, 0.0, 1.0);
  b.label_clamped = std::clamp(b.label_raw, 0.0, 1.0);
  return b;
}

double coverage(std::span<const PredictionSets> sets,
                std::span<const ExampleRecord> records, Side side) {
  if (records.empty()) throw EmptyDataset("coverage: empty dataset");
  if (sets.size() != records.size())
    throw DimensionMismatch("coverage: sets/records size mismatch");
  double hits = 0.0;
  for (size_t i = 0; i < records.size(); ++i) {
    if (side == Side::Labels) {
      hits += sets[i].labels.contains(records[i].y_star) ? 1.0 : 0.0;
    } else {
      if (!records[i].c_star)
        throw DataError("coverage: record lacks ground-truth concepts");
      hits += sets[i].concepts.contains(*records[i].c_star) ? 1.0 : 0.0;
    }
  }
  return hits / static_cast<double>(records.size());
}

double mean_size(std::span<const PredictionSets> sets, Side side) {
  if (sets.empty()) throw EmptyDataset("mean_size: empty input");
  double total = 0.0;
  for (const auto& s : sets)
    total += side == Side::Labels ? static_cast<double>(s.labels.count())
                                  : static_cast<double>(s.concepts.cardinality());
  return total / static_cast<double>(sets.size());
}

double record_consistency(const PredictionSets& sets, const KnowledgeTable& table,
                          Side side, uint64_t cap) {
  if (side == Side::Concepts) {
    double supported = 0.0;
    sets.concepts.for_each(cap, [&](uint64_t idx, std::span<const uint32_t>) {
      if (table.deduce_intersects(idx, sets.labels)) supported += 1.0;
    });
    double denom = std::max<double>(1.0, static_cast<double>(sets.concepts.cardinality()));
    return supported / denom;
  }
  LabelSet entailed = table.deduce_image(sets.concepts, cap);
  double supported = 0.0;
  for (uint32_t y : sets.labels.values())
    if (entailed.contains(y)) supported += 1.0;
  double denom = std::max<double>(1.0, static_cast<double>(sets.labels.count()));
  return supported / denom;
}

double consistency(std::span<const PredictionSets> sets,
                   const KnowledgeTable& table, Side side, uint64_t cap) {
  if (sets.empty()) throw EmptyDataset("consistency: empty input");
  double total = 0.0;
  for (const auto& s : sets) total += record_consistency(s, table, side, cap);
  return total / static_cast<double>(sets.size());
}

EvaluationReport evaluate_run(std::span<const ExampleRecord> records,
                              std::span<const PredictionSets> raw_sets,
                              std::span<const PredictionSets> method_sets,
                              const KnowledgeTable& table, double alpha,
                              double beta, uint64_t cap) {
  if (records.empty()) throw EmptyDataset("evaluate_run: empty dataset");
  if (raw_sets.size() != records.size() || method_sets.size() != records.size())
    throw DimensionMismatch("evaluate_run: size mismatch");

  EvaluationReport rep;
  rep.n_records = records.size();
  rep.alpha = alpha;
  rep.beta = beta;

  rep.labels.coverage = coverage(method_sets, records, Side::Labels);
  rep.labels.mean_size = mean_size(method_sets, Side::Labels);
  rep.labels.consistency = consistency(method_sets, table, Side::Labels, cap);
  rep.concepts.coverage = coverage(method_sets, records, Side::Concepts);
  rep.concepts.mean_size = mean_size(method_sets, Side::Concepts);
  rep.concepts.consistency = consistency(method_sets, table, Side::Concepts, cap);

  rep.raw_label_coverage = coverage(raw_sets, records, Side::Labels);
  rep.raw_concept_coverage = coverage(raw_sets, records, Side::Concepts);
  rep.raw_label_size = mean_size(raw_sets, Side::Labels);
  rep.raw_concept_size = mean_size(raw_sets, Side::Concepts);

  std::vector<GroundTruth> truths;
  truths.reserve(records.size());
  double jf_label = 0.0, jf_concept = 0.0;
  for (size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!r.c_star) throw DataError("evaluate_run: record lacks ground-truth concepts");
    uint64_t c_idx = table.space().index_of(*r.c_star);
    truths.push_back(GroundTruth{c_idx, r.y_star});

    LabelSet deduced = table.deduce_image(raw_sets[i].concepts, cap);
    if (!raw_sets[i].labels.contains(r.y_star) && !deduced.contains(r.y_star))
      jf_label += 1.0;
    // c* lies in the abduced set exactly when its deduction meets the raw
    // label set; no preimage materialization needed.
    bool in_raw = raw_sets[i].concepts.contains(*r.c_star);
    bool in_abduced = table.deduce_intersects(c_idx, raw_sets[i].labels);
    if (!in_raw && !in_abduced) jf_concept += 1.0;
  }
  double n = static_cast<double>(records.size());
  rep.joint_failure_label = jf_label / n;
  rep.joint_failure_concept = jf_concept / n;

  DeltaEstimates deltas = estimate_deltas(truths, table);
  rep.delta_ab = deltas.abductive;
  rep.delta_de = deltas.deductive;
  rep.bounds = theoretical_bounds(alpha, beta, rep.delta_ab, rep.delta_de,
                                  rep.joint_failure_concept, rep.joint_failure_label);
  return rep;
}

}  // namespace coco
