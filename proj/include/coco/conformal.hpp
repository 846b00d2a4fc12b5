#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "coco/sets.hpp"
#include "coco/space.hpp"

namespace coco {

// Probability clamp applied before the log so scores stay finite.
constexpr double kScoreClamp = 1e-12;

// Nonconformity score s = -log(max(p, clamp)); nonnegative and finite.
double nonconformity_score(double probability);

// Finite-sample-corrected empirical quantile: the r-th smallest score with
// r = ceil((n+1)(1-level)); +inf when r > n, which forces the full set.
double calibrate_quantile(std::span<const double> scores, double level);

// { y : s(p_y) <= q }; ties at the threshold are included.
LabelSet conformal_label_set(std::span<const double> label_probs, double threshold);

std::vector<uint32_t> per_concept_set(std::span<const double> concept_probs,
                                      double threshold);

// Lazy Cartesian product of per-concept value sets.
ConceptSet product_concept_set(const ConceptSpace& space,
                               std::vector<std::vector<uint32_t>> factors);

// Bonferroni split: each factor gets level/k.
std::vector<double> bonferroni_split(double level, uint32_t k);

// Frozen quantile calibration state.
struct QuantileCalibration {
  uint64_t n = 0;
  double alpha = 0.0;
  std::vector<double> betas;  // per-concept levels
  double q_label = std::numeric_limits<double>::infinity();
  std::vector<double> q_concepts;
  std::optional<double> q_full_vector;  // whole-vector score threshold
};

// Whole-vector score: sum of per-concept clamped log scores of the vector's
// components, i.e. -log prod_j p_j(c_j) under the clamp.
double full_vector_score(const FactorizedConceptDistribution& dist,
                         std::span<const uint32_t> components);

// { v : full_vector_score(v) <= q } enumerated with monotone partial-sum
// pruning; explicit result.
ConceptSet full_vector_concept_set(const FactorizedConceptDistribution& dist,
                                   const ConceptSpace& space, double threshold,
                                   uint64_t cap);

}  // namespace coco
