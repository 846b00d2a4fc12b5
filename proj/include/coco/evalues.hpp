#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "coco/records.hpp"
#include "coco/sets.hpp"
#include "coco/space.hpp"

namespace coco {

// Soft-rank e-variable (n+1)*s / (S + s); 0 when every score is zero.
double soft_rank_evalue(double test_score, double score_sum, uint64_t n);

// Average keeps the e-variable guarantee by linearity alone.  Product needs
// the per-concept e-values to be independent given the test input and the
// calibration data, which sharing both generally breaks; it is provided for
// ablation and behaves well in practice.
enum class EAggregation { Average, Product };

double aggregate_evalues(std::span<const double> evalues, EAggregation mode);

// Frozen e-value calibration: calibration count plus ground-truth score sums.
struct EValueCalibration {
  uint64_t n = 0;
  double label_score_sum = 0.0;
  std::vector<double> concept_score_sums;
};

// { y : e(y) < 1/level }, strict inequality.
LabelSet evalue_label_set(std::span<const double> label_probs,
                          const EValueCalibration& cal, double level);

double label_evalue(std::span<const double> label_probs,
                    const EValueCalibration& cal, uint32_t label);
double concept_evalue(const FactorizedConceptDistribution& dist,
                      const EValueCalibration& cal,
                      std::span<const uint32_t> components, EAggregation mode);

// { v : aggregate_j e_j(v_j) < 1/level }.  A single threshold covers the whole
// vector, no per-concept correction.  Average mode prunes a tuple as soon as
// its partial sum plus the minimal attainable remainder already reaches the
// threshold; the result matches brute-force enumeration exactly.
ConceptSet evalue_concept_set(const FactorizedConceptDistribution& dist,
                              const EValueCalibration& cal, double level,
                              EAggregation mode, uint64_t cap);

// ----------------------------------------------------------------------------
// Bootstrap selection of data-dependent miscoverage levels under size budgets.
// ----------------------------------------------------------------------------

struct BudgetGrid {
  std::vector<double> alphas{0.10, 0.15, 0.20, 0.25, 0.30};
  std::vector<double> betas{0.10, 0.35, 0.40, 0.45, 0.50, 0.55, 0.60};
};

enum class BudgetRule { PerSide, Lexicographic };

struct BudgetIteration {
  double alpha = 0.0;
  double beta = 0.0;
  bool alpha_feasible = true;
  bool beta_feasible = true;
  double mean_label_size = 0.0;
  double mean_concept_size = 0.0;
  double label_coverage = 0.0;
  double concept_coverage = 0.0;
};

struct BudgetSelection {
  BudgetGrid grid;
  double budget_labels = 0.0;
  double budget_concepts = 0.0;
  uint32_t iterations = 0;
  EAggregation mode = EAggregation::Average;
  BudgetRule rule = BudgetRule::PerSide;
  std::vector<BudgetIteration> per_iteration;
  double mean_alpha = 0.0;
  double mean_beta = 0.0;
  double target_label_coverage = 0.0;    // 1 - mean_alpha
  double target_concept_coverage = 0.0;  // 1 - mean_beta
  double mean_label_coverage = 0.0;
  double mean_concept_coverage = 0.0;
  double mean_label_size = 0.0;
  double mean_concept_size = 0.0;
  uint32_t infeasible_alpha_iterations = 0;
  uint32_t infeasible_beta_iterations = 0;
};

// Per bootstrap iteration: resample the calibration records with replacement,
// recompute score sums, rebuild e-value sets on the fixed test split across
// the grid, and pick per side the smallest level whose mean set size stays
// within the budget.  Iteration seeds derive from (seed, t) so results are
// order- and parallelism-independent.
BudgetSelection budget_select(std::span<const ExampleRecord> calibration,
                              std::span<const ExampleRecord> test,
                              const ConceptSpace& space, const BudgetGrid& grid,
                              double budget_labels, double budget_concepts,
                              uint32_t bootstrap_iterations, uint64_t seed,
                              EAggregation mode, uint64_t cap,
                              BudgetRule rule = BudgetRule::PerSide);

}  // namespace coco
