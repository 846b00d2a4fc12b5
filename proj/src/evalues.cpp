#include "coco/evalues.hpp"

#include <algorithm>
#include <cmath>

#include "coco/conformal.hpp"
#include "coco/errors.hpp"
#include "coco/rng.hpp"

namespace coco {

double soft_rank_evalue(double test_score, double score_sum, uint64_t n) {
  if (!(test_score >= 0.0) || !(score_sum >= 0.0) || !std::isfinite(test_score) ||
      !std::isfinite(score_sum))
    throw DataError("soft_rank_evalue: scores must be finite and nonnegative");
  double denom = score_sum + test_score;
  if (denom == 0.0) return 0.0;  // all-zero scores are maximally conforming
  return static_cast<double>(n + 1) * test_score / denom;
}

double aggregate_evalues(std::span<const double> evalues, EAggregation mode) {
  if (evalues.empty()) throw DataError("aggregate_evalues: empty input");
  if (mode == EAggregation::Average) {
    double s = 0.0;
    for (double e : evalues) s += e;
    return s / static_cast<double>(evalues.size());
  }
  double p = 1.0;
  for (double e : evalues) p *= e;
  return p;
}

double label_evalue(std::span<const double> label_probs,
                    const EValueCalibration& cal, uint32_t label) {
  return soft_rank_evalue(nonconformity_score(label_probs[label]),
                          cal.label_score_sum, cal.n);
}

LabelSet evalue_label_set(std::span<const double> label_probs,
                          const EValueCalibration& cal, double level) {
  if (!(level > 0.0 && level < 1.0))
    throw ConfigError("miscoverage level must lie in (0, 1)");
  const double threshold = 1.0 / level;
  LabelSet out(static_cast<uint32_t>(label_probs.size()));
  for (uint32_t y = 0; y < label_probs.size(); ++y)
    if (label_evalue(label_probs, cal, y) < threshold) out.insert(y);
  return out;
}

double concept_evalue(const FactorizedConceptDistribution& dist,
                      const EValueCalibration& cal,
                      std::span<const uint32_t> components, EAggregation mode) {
  std::vector<double> es(components.size());
  for (uint32_t j = 0; j < components.size(); ++j)
    es[j] = soft_rank_evalue(nonconformity_score(dist.per_concept[j][components[j]]),
                             cal.concept_score_sums[j], cal.n);
  return aggregate_evalues(es, mode);
}

namespace {

struct EvalueGrid {
  // evalues[j][v] for concept j, candidate value v
  std::vector<std::vector<double>> evalues;
};

EvalueGrid per_value_evalues(const FactorizedConceptDistribution& dist,
                             const EValueCalibration& cal) {
  EvalueGrid g;
  g.evalues.resize(dist.per_concept.size());
  for (uint32_t j = 0; j < dist.per_concept.size(); ++j) {
    g.evalues[j].resize(dist.per_concept[j].size());
    for (uint32_t v = 0; v < dist.per_concept[j].size(); ++v)
      g.evalues[j][v] = soft_rank_evalue(nonconformity_score(dist.per_concept[j][v]),
                                         cal.concept_score_sums[j], cal.n);
  }
  return g;
}

void average_dfs(const EvalueGrid& g, const ConceptSpace& space,
                 const std::vector<double>& suffix_min, double bound,
                 uint32_t depth, double partial, std::vector<uint32_t>& comps,
                 std::vector<uint64_t>& out) {
  if (depth == space.arity()) {
    out.push_back(space.index_of(comps));
    return;
  }
  for (uint32_t v = 0; v < space.domain_size(depth); ++v) {
    double s = partial + g.evalues[depth][v];
    // Even the most conforming completion keeps the sum at or above `bound`:
    // every extension of this prefix is excluded.
    if (s + suffix_min[depth + 1] >= bound) continue;
    comps[depth] = v;
    average_dfs(g, space, suffix_min, bound, depth + 1, s, comps, out);
  }
}

void product_dfs(const EvalueGrid& g, const ConceptSpace& space, double threshold,
                 uint32_t depth, std::vector<uint32_t>& comps, EAggregation mode,
                 std::vector<uint64_t>& out) {
  if (depth == space.arity()) {
    std::vector<double> es(space.arity());
    for (uint32_t j = 0; j < space.arity(); ++j) es[j] = g.evalues[j][comps[j]];
    if (aggregate_evalues(es, mode) < threshold) out.push_back(space.index_of(comps));
    return;
  }
  for (uint32_t v = 0; v < space.domain_size(depth); ++v) {
    comps[depth] = v;
    product_dfs(g, space, threshold, depth + 1, comps, mode, out);
  }
}

}  // namespace

ConceptSet evalue_concept_set(const FactorizedConceptDistribution& dist,
                              const EValueCalibration& cal, double level,
                              EAggregation mode, uint64_t cap) {
  if (!(level > 0.0 && level < 1.0))
    throw ConfigError("miscoverage level must lie in (0, 1)");
  ConceptSpace space(
      [&] {
        std::vector<uint32_t> ds(dist.per_concept.size());
        for (size_t j = 0; j < ds.size(); ++j)
          ds[j] = static_cast<uint32_t>(dist.per_concept[j].size());
        return ds;
      }());
  dist.validate(space);
  if (cal.concept_score_sums.size() != space.arity())
    throw DimensionMismatch("e-value calibration arity mismatch");
  if (space.total_size() > cap)
    throw CapExceeded("e-value concept set enumeration exceeds cap");

  const double threshold = 1.0 / level;
  EvalueGrid g = per_value_evalues(dist, cal);
  std::vector<uint64_t> out;
  std::vector<uint32_t> comps(space.arity(), 0);
  if (mode == EAggregation::Average) {
    const double k = static_cast<double>(space.arity());
    std::vector<double> suffix_min(space.arity() + 1, 0.0);
    for (uint32_t j = space.arity(); j-- > 0;)
      suffix_min[j] = suffix_min[j + 1] +
                      *std::min_element(g.evalues[j].begin(), g.evalues[j].end());
    average_dfs(g, space, suffix_min, threshold * k, 0, 0.0, comps, out);
  } else {
    product_dfs(g, space, threshold, 0, comps, mode, out);
  }
  return ConceptSet::make_explicit(space, std::move(out));
}

namespace {

struct RecordScores {
  std::vector<double> label_true;                 // s(label_probs[y*]) per record
  std::vector<std::vector<double>> concept_true;  // per concept, per record
};

RecordScores ground_truth_scores(std::span<const ExampleRecord> records,
                                 const ConceptSpace& space) {
  RecordScores s;
  s.concept_true.resize(space.arity());
  for (const auto& r : records) {
    if (!r.label_probs)
      throw MissingInput("budget_select: record lacks label probabilities");
    if (!r.c_star)
      throw MissingInput("budget_select: record lacks ground-truth concepts");
    s.label_true.push_back(nonconformity_score((*r.label_probs)[r.y_star]));
    for (uint32_t j = 0; j < space.arity(); ++j)
      s.concept_true[j].push_back(
          nonconformity_score(r.concept_probs[j][(*r.c_star)[j]]));
  }
  return s;
}

}  // namespace

BudgetSelection budget_select(std::span<const ExampleRecord> calibration,
                              std::span<const ExampleRecord> test,
                              const ConceptSpace& space, const BudgetGrid& grid,
                              double budget_labels, double budget_concepts,
                              uint32_t bootstrap_iterations, uint64_t seed,
                              EAggregation mode, uint64_t cap, BudgetRule rule) {
  if (calibration.empty() || test.empty())
    throw EmptyDataset("budget_select: calibration and test must be nonempty");
  if (grid.alphas.empty() || grid.betas.empty())
    throw ConfigError("budget_select: grid must be nonempty");
  if (bootstrap_iterations == 0)
    throw ConfigError("budget_select: need at least one bootstrap iteration");
  if (space.total_size() > cap)
    throw CapExceeded("budget_select: concept space exceeds enumeration cap");

  std::vector<double> alphas = grid.alphas;
  std::vector<double> betas = grid.betas;
  std::sort(alphas.begin(), alphas.end());
  std::sort(betas.begin(), betas.end());

  const uint64_t n = calibration.size();
  RecordScores cal_scores = ground_truth_scores(calibration, space);

  // Precompute per-test-record candidate scores once; bootstrap only moves
  // the calibration score sums.
  const size_t m_test = test.size();
  std::vector<std::vector<double>> test_label_scores(m_test);
  std::vector<uint32_t> test_y(m_test);
  std::vector<std::vector<std::vector<double>>> test_concept_scores(m_test);
  std::vector<std::vector<uint32_t>> test_c(m_test);
  for (size_t i = 0; i < m_test; ++i) {
    const auto& r = test[i];
    if (!r.label_probs || !r.c_star)
      throw MissingInput("budget_select: test record lacks ground truth or label probabilities");
    test_y[i] = r.y_star;
    test_c[i] = *r.c_star;
    test_label_scores[i].resize(r.label_probs->size());
    for (uint32_t y = 0; y < r.label_probs->size(); ++y)
      test_label_scores[i][y] = nonconformity_score((*r.label_probs)[y]);
    test_concept_scores[i].resize(space.arity());
    for (uint32_t j = 0; j < space.arity(); ++j) {
      test_concept_scores[i][j].resize(space.domain_size(j));
      for (uint32_t v = 0; v < space.domain_size(j); ++v)
        test_concept_scores[i][j][v] = nonconformity_score(r.concept_probs[j][v]);
    }
  }

  BudgetSelection sel;
  sel.grid = grid;
  sel.budget_labels = budget_labels;
  sel.budget_concepts = budget_concepts;
  sel.iterations = bootstrap_iterations;
  sel.mode = mode;
  sel.rule = rule;
  sel.per_iteration.reserve(bootstrap_iterations);

  std::vector<uint32_t> comps(space.arity());
  for (uint32_t t = 0; t < bootstrap_iterations; ++t) {
    Rng rng(mix_seed(seed, t));
    double sum_label = 0.0;
    std::vector<double> sum_concept(space.arity(), 0.0);
    for (uint64_t i = 0; i < n; ++i) {
      uint64_t pick = rng.below(n);
      sum_label += cal_scores.label_true[pick];
      for (uint32_t j = 0; j < space.arity(); ++j)
        sum_concept[j] += cal_scores.concept_true[j][pick];
    }

    // Mean set sizes and coverages per grid level on the fixed test split.
    std::vector<double> label_sizes(alphas.size(), 0.0);
    std::vector<double> label_cov(alphas.size(), 0.0);
    std::vector<double> concept_sizes(betas.size(), 0.0);
    std::vector<double> concept_cov(betas.size(), 0.0);
    for (size_t i = 0; i < m_test; ++i) {
      for (size_t a = 0; a < alphas.size(); ++a) {
        double thr = 1.0 / alphas[a];
        uint32_t size = 0;
        for (double s : test_label_scores[i])
          if (soft_rank_evalue(s, sum_label, n) < thr) ++size;
        label_sizes[a] += size;
        if (soft_rank_evalue(test_label_scores[i][test_y[i]], sum_label, n) < thr)
          label_cov[a] += 1.0;
      }
      // Aggregate e-value per tuple, then compare against each threshold.
      std::vector<double> tuple_agg;
      tuple_agg.reserve(space.total_size());
      std::fill(comps.begin(), comps.end(), 0);
      for (;;) {
        double agg;
        if (mode == EAggregation::Average) {
          double s = 0.0;
          for (uint32_t j = 0; j < space.arity(); ++j)
            s += soft_rank_evalue(test_concept_scores[i][j][comps[j]],
                                  sum_concept[j], n);
          agg = s / static_cast<double>(space.arity());
        } else {
          agg = 1.0;
          for (uint32_t j = 0; j < space.arity(); ++j)
            agg *= soft_rank_evalue(test_concept_scores[i][j][comps[j]],
                                    sum_concept[j], n);
        }
        tuple_agg.push_back(agg);
        int j = static_cast<int>(space.arity()) - 1;
        while (j >= 0 && ++comps[j] == space.domain_size(j)) comps[j--] = 0;
        if (j < 0) break;
      }
      double true_agg = tuple_agg[space.index_of(test_c[i])];
      for (size_t b = 0; b < betas.size(); ++b) {
        double thr = 1.0 / betas[b];
        uint32_t size = 0;
        for (double agg : tuple_agg)
          if (agg < thr) ++size;
        concept_sizes[b] += size;
        if (true_agg < thr) concept_cov[b] += 1.0;
      }
    }
    for (auto& x : label_sizes) x /= static_cast<double>(m_test);
    for (auto& x : label_cov) x /= static_cast<double>(m_test);
    for (auto& x : concept_sizes) x /= static_cast<double>(m_test);
    for (auto& x : concept_cov) x /= static_cast<double>(m_test);

    // Smallest level meeting the budget; the largest grid level flagged
    // infeasible when none does.  The lexicographic rule fixes the label side
    // first; with per-side budgets the two rules coincide.
    BudgetIteration it;
    auto select = [](const std::vector<double>& levels,
                     const std::vector<double>& sizes, double budget,
                     double& level_out, bool& feasible_out, size_t& idx_out) {
      for (size_t i = 0; i < levels.size(); ++i) {
        if (sizes[i] <= budget) {
          level_out = levels[i];
          feasible_out = true;
          idx_out = i;
          return;
        }
      }
      level_out = levels.back();
      feasible_out = false;
      idx_out = levels.size() - 1;
    };
    size_t ai = 0, bi = 0;
    select(alphas, label_sizes, budget_labels, it.alpha, it.alpha_feasible, ai);
    select(betas, concept_sizes, budget_concepts, it.beta, it.beta_feasible, bi);
    it.mean_label_size = label_sizes[ai];
    it.mean_concept_size = concept_sizes[bi];
    it.label_coverage = label_cov[ai];
    it.concept_coverage = concept_cov[bi];
    sel.per_iteration.push_back(it);
  }

  double T = static_cast<double>(bootstrap_iterations);
  for (const auto& it : sel.per_iteration) {
    sel.mean_alpha += it.alpha / T;
    sel.mean_beta += it.beta / T;
    sel.mean_label_coverage += it.label_coverage / T;
    sel.mean_concept_coverage += it.concept_coverage / T;
    sel.mean_label_size += it.mean_label_size / T;
    sel.mean_concept_size += it.mean_concept_size / T;
    if (!it.alpha_feasible) ++sel.infeasible_alpha_iterations;
    if (!it.beta_feasible) ++sel.infeasible_beta_iterations;
  }
  sel.target_label_coverage = 1.0 - sel.mean_alpha;
  sel.target_concept_coverage = 1.0 - sel.mean_beta;
  return sel;
}

}  // namespace coco
