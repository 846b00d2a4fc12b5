#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "coco/sets.hpp"
#include "coco/space.hpp"

namespace coco {

// ----------------------------------------------------------------------------
// Built-in knowledge programs.  Each compiles to a concept-to-label weight
// table where a row is either all-zero (infeasible concept vector) or a
// probability vector over labels; deterministic rules give one-hot rows and
// shared signatures split the mass equally across their group.
// ----------------------------------------------------------------------------

struct DigitSum {
  uint32_t digits = 2;  // k
  uint32_t base = 10;   // values per digit
};

struct SumParity {
  uint32_t digits = 2;
  uint32_t base = 10;
};

struct ActiveCount {
  uint32_t symptoms = 4;  // binary concepts; label = number active
};

// Label = value with the highest vote count; ties between the two
// highest-priority values at the max produce the dedicated conflict label,
// other ties resolve by priority order.
struct MajorityVote {
  uint32_t voters = 5;
  uint32_t values = 4;
  std::vector<uint32_t> priority;  // permutation of value ids, strongest first
  bool conflict_label = true;      // appended as label id `values`
};

struct AttributeLiteral {
  uint32_t concept_index = 0;
  uint32_t value = 0;
  bool negated = false;
};

// A rule fires on every concept vector satisfying all its literals and
// contributes its label group; rows take uniform mass over the union of
// fired groups, so a two-way shared signature yields 1/2 per label.
struct AttributeRule {
  std::vector<AttributeLiteral> when;
  std::vector<uint32_t> labels;
};

struct AttributeRules {
  std::vector<uint32_t> domain_sizes;
  uint32_t num_labels = 0;
  std::vector<AttributeRule> rules;
};

struct ExplicitTable {
  std::vector<uint32_t> domain_sizes;
  uint32_t num_labels = 0;
  std::vector<std::vector<double>> rows;  // dense, mixed-radix row order
};

using KnowledgeProgram = std::variant<DigitSum, SumParity, ActiveCount,
                                      MajorityVote, AttributeRules, ExplicitTable>;

// ----------------------------------------------------------------------------
// Compiled knowledge.
// ----------------------------------------------------------------------------

class KnowledgeTable {
 public:
  using Row = std::vector<std::pair<uint32_t, double>>;  // (label, weight)

  KnowledgeTable(ConceptSpace space, LabelSpace labels, std::vector<Row> rows);

  const ConceptSpace& space() const { return space_; }
  const LabelSpace& labels() const { return labels_; }
  uint64_t num_rows() const { return rows_.size(); }
  const Row& row(uint64_t concept_index) const { return rows_[concept_index]; }
  double weight(uint64_t concept_index, uint32_t label) const;
  bool feasible(uint64_t concept_index) const { return !rows_[concept_index].empty(); }

  // Set-valued argmax of the row; empty for infeasible vectors.
  const std::vector<uint32_t>& deduce(uint64_t concept_index) const {
    return deduced_[concept_index];
  }
  LabelSet deduce_set(uint64_t concept_index) const;
  bool deduce_intersects(uint64_t concept_index, const LabelSet& labels) const;

  // Union of deduce over the set's members.
  LabelSet deduce_image(const ConceptSet& concepts, uint64_t cap) const;

  // Preimage: all concept vectors whose deduction meets `labels`.
  std::vector<uint64_t> abduce(const LabelSet& labels, uint64_t cap) const;
  ConceptSet abduce_set(const LabelSet& labels, uint64_t cap) const;

  std::vector<uint64_t> feasible_indices() const;

  bool operator==(const KnowledgeTable& other) const {
    return space_ == other.space_ && labels_.num_labels == other.labels_.num_labels &&
           rows_ == other.rows_;
  }

 private:
  ConceptSpace space_;
  LabelSpace labels_;
  std::vector<Row> rows_;
  std::vector<std::vector<uint32_t>> deduced_;  // argmax tie set per row
};

KnowledgeTable compile(const KnowledgeProgram& program, uint64_t cap);

// Tabular text format: one row per concept vector in mixed-radix index order,
// whitespace-separated label weights; '#' starts a comment line.
KnowledgeTable load_table(const std::filesystem::path& path,
                          std::vector<uint32_t> domain_sizes,
                          uint32_t num_labels, uint64_t cap);

// Exact marginalization p(y) = sum_c prod_j p_j(c_j) * W[c, y].
std::vector<double> marginal_label_distribution(
    const FactorizedConceptDistribution& dist, const KnowledgeTable& table,
    uint64_t cap);

struct GroundTruth {
  uint64_t concept_index = 0;
  uint32_t label = 0;
};

struct DeltaEstimates {
  double abductive = 0.0;  // fraction with c* in abduce({y*})
  double deductive = 0.0;  // expected tie success: 1/|T| when y* in T, else 0
};

DeltaEstimates estimate_deltas(std::span<const GroundTruth> truths,
                               const KnowledgeTable& table);

}  // namespace coco
