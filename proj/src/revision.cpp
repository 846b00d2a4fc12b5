#include "coco/revision.hpp"

#include <algorithm>
#include <cassert>

#include "coco/errors.hpp"

namespace coco {

std::string method_tag(Method m) {
  switch (m) {
    case Method::Raw: return "raw";
    case Method::TaskOnly: return "to";
    case Method::TaskAbduction: return "tab";
    case Method::ConceptsOnly: return "co";
    case Method::ConceptsDeduction: return "cde";
    case Method::LabelRevision: return "rpb";
    case Method::Joint: return "coco";
    case Method::JointBudget: return "coco-star";
  }
  return "?";
}

Method method_from_tag(const std::string& tag) {
  if (tag == "raw") return Method::Raw;
  if (tag == "to") return Method::TaskOnly;
  if (tag == "tab") return Method::TaskAbduction;
  if (tag == "co") return Method::ConceptsOnly;
  if (tag == "cde") return Method::ConceptsDeduction;
  if (tag == "rpb") return Method::LabelRevision;
  if (tag == "coco") return Method::Joint;
  if (tag == "coco-star") return Method::JointBudget;
  throw ConfigError("unknown method tag: " + tag);
}

ConceptSet abduction_set(const LabelSet& labels, const KnowledgeTable& table,
                         uint64_t cap) {
  return table.abduce_set(labels, cap);
}

LabelSet deduction_set(const ConceptSet& concepts, const KnowledgeTable& table,
                       uint64_t cap) {
  return table.deduce_image(concepts, cap);
}

Revised revise(const ConceptSet& concepts, const LabelSet& labels,
               const KnowledgeTable& table, uint64_t cap) {
  LabelSet deduced = table.deduce_image(concepts, cap);
  Revised out{ConceptSet::make_empty(table.space()), labels.intersect(deduced)};
  std::vector<uint64_t> kept;
  concepts.for_each(cap, [&](uint64_t idx, std::span<const uint32_t>) {
    if (table.deduce_intersects(idx, labels)) kept.push_back(idx);
  });
  out.concepts = ConceptSet::make_explicit(table.space(), std::move(kept));
  assert(mutually_consistent(out.concepts, out.labels, table, cap));
  return out;
}

Revised revise_via_abduction(const ConceptSet& concepts, const LabelSet& labels,
                             const KnowledgeTable& table, uint64_t cap) {
  std::vector<uint64_t> preimage = table.abduce(labels, cap);
  std::vector<uint64_t> kept;
  concepts.for_each(cap, [&](uint64_t idx, std::span<const uint32_t>) {
    if (std::binary_search(preimage.begin(), preimage.end(), idx))
      kept.push_back(idx);
  });
  LabelSet deduced = table.deduce_image(concepts, cap);
  return Revised{ConceptSet::make_explicit(table.space(), std::move(kept)),
                 labels.intersect(deduced)};
}

PredictionSets apply_method(Method method, const ExampleRecord& record,
                            const LabelSet& raw_labels,
                            const ConceptSet& raw_concepts,
                            const KnowledgeTable& table, uint64_t cap) {
  switch (method) {
    case Method::Raw:
      return {argmax_labels(record, table.labels().num_labels),
              argmax_concepts(record, table.space()), method};
    case Method::TaskOnly:
      return {raw_labels, argmax_concepts(record, table.space()), method};
    case Method::ConceptsOnly:
      return {argmax_labels(record, table.labels().num_labels), raw_concepts,
              method};
    case Method::TaskAbduction:
      return {raw_labels, abduction_set(raw_labels, table, cap), method};
    case Method::ConceptsDeduction:
      return {deduction_set(raw_concepts, table, cap), raw_concepts, method};
    case Method::LabelRevision:
      return {raw_labels.intersect(deduction_set(raw_concepts, table, cap)),
              raw_concepts, method};
    case Method::Joint:
    case Method::JointBudget: {
      Revised r = revise(raw_concepts, raw_labels, table, cap);
      return {r.labels, r.concepts, method};
    }
  }
  throw ConfigError("apply_method: unknown method");
}

Revised oracle_largest_consistent_pair(const ConceptSet& concepts,
                                       const LabelSet& labels,
                                       const KnowledgeTable& table,
                                       uint64_t cap) {
  if (concepts.cardinality() * std::max<uint64_t>(labels.count(), 1) >
      (uint64_t{1} << 20))
    throw CapExceeded("oracle_largest_consistent_pair: instance too large");
  std::vector<uint64_t> G = concepts.materialize(cap);
  LabelSet U = labels;
  for (;;) {
    // One monotone pruning pass from the current pair.
    std::vector<uint64_t> G2;
    G2.reserve(G.size());
    for (uint64_t c : G)
      if (table.deduce_intersects(c, U)) G2.push_back(c);
    LabelSet entailed(U.universe());
    for (uint64_t c : G)
      for (uint32_t y : table.deduce(c)) entailed.insert(y);
    LabelSet U2 = U.intersect(entailed);
    bool stable = (G2 == G) && (U2 == U);
    G = std::move(G2);
    U = std::move(U2);
    if (stable) break;
  }
  return Revised{ConceptSet::make_explicit(table.space(), std::move(G)), U};
}

bool mutually_consistent(const ConceptSet& concepts, const LabelSet& labels,
                         const KnowledgeTable& table, uint64_t cap) {
  bool ok = true;
  LabelSet entailed(labels.universe());
  concepts.for_each(cap, [&](uint64_t idx, std::span<const uint32_t>) {
    if (!table.deduce_intersects(idx, labels)) ok = false;
    for (uint32_t y : table.deduce(idx)) entailed.insert(y);
  });
  return ok && labels.is_subset_of(entailed);
}

ConceptSet argmax_concepts(const ExampleRecord& record, const ConceptSpace& space) {
  if (record.concept_probs.size() != space.arity())
    throw DimensionMismatch("argmax_concepts: arity mismatch");
  std::vector<std::vector<uint32_t>> factors(space.arity());
  for (uint32_t j = 0; j < space.arity(); ++j) {
    const auto& p = record.concept_probs[j];
    double best = *std::max_element(p.begin(), p.end());
    for (uint32_t v = 0; v < p.size(); ++v)
      if (p[v] >= best) factors[j].push_back(v);
  }
  return ConceptSet::make_product(space, std::move(factors));
}

LabelSet argmax_labels(const ExampleRecord& record, uint32_t num_labels) {
  if (!record.label_probs)
    throw MissingInput("argmax_labels: record lacks label probabilities");
  const auto& p = *record.label_probs;
  if (p.size() != num_labels)
    throw DimensionMismatch("argmax_labels: label count mismatch");
  double best = *std::max_element(p.begin(), p.end());
  LabelSet out(num_labels);
  for (uint32_t y = 0; y < num_labels; ++y)
    if (p[y] >= best) out.insert(y);
  return out;
}

}  // namespace coco
