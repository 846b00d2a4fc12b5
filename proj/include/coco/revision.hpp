#pragma once

#include <string>

#include "coco/knowledge.hpp"
#include "coco/records.hpp"
#include "coco/sets.hpp"

namespace coco {

// Method tags.  CLI spelling: to | tab | co | cde | rpb | coco | coco-star.
enum class Method {
  Raw,                // argmax point predictions on both sides
  TaskOnly,           // to
  TaskAbduction,      // tab
  ConceptsOnly,       // co
  ConceptsDeduction,  // cde
  LabelRevision,      // rpb: revision applied to the label side only
  Joint,              // coco
  JointBudget,        // coco-star: joint revision on e-value sets
};

std::string method_tag(Method m);
Method method_from_tag(const std::string& tag);

struct PredictionSets {
  LabelSet labels;
  ConceptSet concepts;
  Method method = Method::Raw;
};

struct Revised {
  ConceptSet concepts;
  LabelSet labels;
};

// All concept vectors entailing at least one label of the set.
ConceptSet abduction_set(const LabelSet& labels, const KnowledgeTable& table,
                         uint64_t cap);

// All labels derivable from some member of the concept set.
LabelSet deduction_set(const ConceptSet& concepts, const KnowledgeTable& table,
                       uint64_t cap);

// One simultaneous revision step: keep concepts entailing a retained label and
// labels entailed by a retained concept.  A single application is a fixed
// point; iterating changes nothing.
Revised revise(const ConceptSet& concepts, const LabelSet& labels,
               const KnowledgeTable& table, uint64_t cap);

// Same result computed by materializing the abductive preimage instead of
// filtering the concept set's members; kept separate so tests can check the
// two routes agree bit for bit.
Revised revise_via_abduction(const ConceptSet& concepts, const LabelSet& labels,
                             const KnowledgeTable& table, uint64_t cap);

// Dispatch on the method tag given raw conformal sets and the record's
// probability summaries (needed for the argmax point-prediction sides).
PredictionSets apply_method(Method method, const ExampleRecord& record,
                            const LabelSet& raw_labels,
                            const ConceptSet& raw_concepts,
                            const KnowledgeTable& table, uint64_t cap);

// Greatest-fixed-point oracle: the unique maximal mutually consistent pair
// contained in the inputs, computed by iterated elementwise pruning.
Revised oracle_largest_consistent_pair(const ConceptSet& concepts,
                                       const LabelSet& labels,
                                       const KnowledgeTable& table, uint64_t cap);

// Mutual-consistency postcondition of joint revision outputs.
bool mutually_consistent(const ConceptSet& concepts, const LabelSet& labels,
                         const KnowledgeTable& table, uint64_t cap);

// Per-concept argmax tie sets as a product set; full tie sets, no index bias.
ConceptSet argmax_concepts(const ExampleRecord& record, const ConceptSpace& space);
LabelSet argmax_labels(const ExampleRecord& record, uint32_t num_labels);

}  // namespace coco
