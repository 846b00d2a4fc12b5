#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "coco/knowledge.hpp"
#include "coco/records.hpp"

namespace coco {

// Simulated concept predictor.  Temperature scales a one-hot logit at the
// target value (the ground truth, or its permuted image when a shortcut is
// configured): tau = 0 is exactly one-hot, tau -> inf is uniform.
// `logit_noise` adds iid per-record Gaussian jitter to the logits, which makes
// nonconformity scores continuous; 0 keeps the closed-form probabilities.
// Explicit confusion rows, when set for a concept, override the temperature
// model: the row indexed by the target value is emitted as-is.
struct PredictorSpec {
  enum class Prior {
    UniformFeasible,  // uniform over concept vectors with feasible rows
    LabelUniform,     // uniform label, then uniform over its preimage
  };

  double temperature = 1.0;
  double logit_noise = 0.0;
  std::vector<std::optional<std::vector<uint32_t>>> shortcut;  // per concept
  std::vector<std::optional<std::vector<std::vector<double>>>> confusion;
  Prior prior = Prior::UniformFeasible;

  void validate(const ConceptSpace& space) const;
};

// I.i.d. draws: sample c* from the prior, derive y* from the knowledge row
// (deterministic rows fix it, split-mass rows are sampled), emit noisy
// concept probabilities plus the exact marginal label probabilities.  The
// stream splits into (calibration, test) after generation; record i uses the
// derived stream (seed, i), so output is independent of generation order.
std::pair<std::vector<ExampleRecord>, std::vector<ExampleRecord>> generate(
    const KnowledgeTable& table, const PredictorSpec& spec, uint64_t n_cal,
    uint64_t n_test, uint64_t seed, uint64_t cap);

// Validated load of externally produced records.  Absent label_probs are
// filled by exact marginalization; strict mode rejects (c*, y*) pairs with
// zero knowledge weight.
std::vector<ExampleRecord> ingest(const std::filesystem::path& path,
                                  const KnowledgeTable& table, bool strict,
                                  uint64_t cap);

// Same validation/fill pass over in-memory records.
void validate_records(std::vector<ExampleRecord>& records,
                      const KnowledgeTable& table, bool strict, uint64_t cap);

}  // namespace coco
