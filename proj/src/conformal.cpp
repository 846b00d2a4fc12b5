#include "coco/conformal.hpp"

#include <algorithm>
#include <cmath>

#include "coco/errors.hpp"

namespace coco {

double nonconformity_score(double probability) {
  if (!(probability >= 0.0) || probability > 1.0 + 1e-9)
    throw DataError("probability outside [0, 1]");
  return -std::log(std::max(probability, kScoreClamp));
}

double calibrate_quantile(std::span<const double> scores, double level) {
  if (scores.empty()) throw EmptyCalibration("calibrate_quantile: no scores");
  if (!(level > 0.0 && level < 1.0))
    throw ConfigError("miscoverage level must lie in (0, 1)");
  const uint64_t n = scores.size();
  // Snap to the integer when the product lands within 1e-9 of one, so exact
  // rationals like 10 * 0.9 do not round up a rank.
  double x = static_cast<double>(n + 1) * (1.0 - level);
  uint64_t rank = static_cast<uint64_t>(std::ceil(x - 1e-9));
  if (rank > n) return std::numeric_limits<double>::infinity();
  std::vector<double> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end());
  return sorted[rank - 1];
}

LabelSet conformal_label_set(std::span<const double> label_probs,
                             double threshold) {
  LabelSet out(static_cast<uint32_t>(label_probs.size()));
  for (uint32_t y = 0; y < label_probs.size(); ++y)
    if (nonconformity_score(label_probs[y]) <= threshold) out.insert(y);
  return out;
}

std::vector<uint32_t> per_concept_set(std::span<const double> concept_probs,
                                      double threshold) {
  std::vector<uint32_t> out;
  for (uint32_t v = 0; v < concept_probs.size(); ++v)
    if (nonconformity_score(concept_probs[v]) <= threshold) out.push_back(v);
  return out;
}

ConceptSet product_concept_set(const ConceptSpace& space,
                               std::vector<std::vector<uint32_t>> factors) {
  return ConceptSet::make_product(space, std::move(factors));
}

std::vector<double> bonferroni_split(double level, uint32_t k) {
  if (k == 0) throw ConfigError("bonferroni_split: need at least one concept");
  return std::vector<double>(k, level / static_cast<double>(k));
}

double full_vector_score(const FactorizedConceptDistribution& dist,
                         std::span<const uint32_t> components) {
  double s = 0.0;
  for (uint32_t j = 0; j < components.size(); ++j)
    s += nonconformity_score(dist.per_concept[j][components[j]]);
  return s;
}

namespace {

void full_vector_dfs(const FactorizedConceptDistribution& dist,
                     const ConceptSpace& space, double threshold, uint32_t depth,
                     double partial, std::vector<uint32_t>& comps,
                     std::vector<uint64_t>& out) {
  if (depth == space.arity()) {
    out.push_back(space.index_of(comps));
    return;
  }
  for (uint32_t v = 0; v < space.domain_size(depth); ++v) {
    double s = partial + nonconformity_score(dist.per_concept[depth][v]);
    if (s > threshold) continue;  // scores are nonnegative, pruning is sound
    comps[depth] = v;
    full_vector_dfs(dist, space, threshold, depth + 1, s, comps, out);
  }
}

}  // namespace

ConceptSet full_vector_concept_set(const FactorizedConceptDistribution& dist,
                                   const ConceptSpace& space, double threshold,
                                   uint64_t cap) {
  dist.validate(space);
  if (std::isinf(threshold)) return ConceptSet::make_full(space);
  std::vector<uint64_t> out;
  std::vector<uint32_t> comps(space.arity(), 0);
  full_vector_dfs(dist, space, threshold, 0, 0.0, comps, out);
  if (out.size() > cap)
    throw CapExceeded("full-vector concept set exceeds enumeration cap");
  return ConceptSet::make_explicit(space, std::move(out));
}

}  // namespace coco
