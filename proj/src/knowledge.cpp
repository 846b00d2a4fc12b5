#include "coco/knowledge.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "coco/errors.hpp"

namespace coco {

namespace {

constexpr double kRowSumTolerance = 1e-9;
constexpr double kArgmaxTolerance = 1e-12;

void check_cap(uint64_t total, uint64_t cap, const char* what) {
  if (total > cap)
    throw CapExceeded(std::string(what) + ": space of size " +
                      std::to_string(total) + " exceeds enumeration cap " +
                      std::to_string(cap));
}

KnowledgeTable::Row row_from_dense(const std::vector<double>& dense) {
  KnowledgeTable::Row row;
  double sum = 0.0;
  for (uint32_t y = 0; y < dense.size(); ++y) {
    double w = dense[y];
    if (!(w >= 0.0) || w > 1.0 + kRowSumTolerance || !std::isfinite(w))
      throw DataError("knowledge weight must lie in [0, 1]");
    if (w > 0.0) {
      row.emplace_back(y, w);
      sum += w;
    }
  }
  if (!row.empty() && std::abs(sum - 1.0) > kRowSumTolerance)
    throw DataError("knowledge row must be all-zero or sum to 1 within 1e-9");
  return row;
}

struct OneHotBuilder {
  std::vector<KnowledgeTable::Row> rows;
  void push(uint32_t label) { rows.push_back({{label, 1.0}}); }
};

}  // namespace

KnowledgeTable::KnowledgeTable(ConceptSpace space, LabelSpace labels,
                               std::vector<Row> rows)
    : space_(std::move(space)), labels_(labels), rows_(std::move(rows)) {
  if (labels_.num_labels == 0) throw InvalidProgram("label space must be nonempty");
  if (rows_.size() != space_.total_size())
    throw DimensionMismatch("knowledge table row count mismatch");
  deduced_.resize(rows_.size());
  for (uint64_t i = 0; i < rows_.size(); ++i) {
    auto& row = rows_[i];
    std::sort(row.begin(), row.end());
    double sum = 0.0, maxw = 0.0;
    for (auto& [y, w] : row) {
      if (y >= labels_.num_labels)
        throw DimensionMismatch("knowledge row label out of range");
      if (!(w > 0.0) || w > 1.0 + kRowSumTolerance)
        throw DataError("knowledge weight must lie in (0, 1]");
      sum += w;
      maxw = std::max(maxw, w);
    }
    if (!row.empty() && std::abs(sum - 1.0) > kRowSumTolerance)
      throw DataError("knowledge row must be all-zero or sum to 1 within 1e-9");
    for (auto& [y, w] : row)
      if (w >= maxw - kArgmaxTolerance) deduced_[i].push_back(y);
  }
}

double KnowledgeTable::weight(uint64_t concept_index, uint32_t label) const {
  for (auto& [y, w] : rows_[concept_index])
    if (y == label) return w;
  return 0.0;
}

LabelSet KnowledgeTable::deduce_set(uint64_t concept_index) const {
  LabelSet s(labels_.num_labels);
  for (uint32_t y : deduced_[concept_index]) s.insert(y);
  return s;
}

bool KnowledgeTable::deduce_intersects(uint64_t concept_index,
                                       const LabelSet& labels) const {
  for (uint32_t y : deduced_[concept_index])
    if (labels.contains(y)) return true;
  return false;
}

LabelSet KnowledgeTable::deduce_image(const ConceptSet& concepts,
                                      uint64_t cap) const {
  LabelSet out(labels_.num_labels);
  concepts.for_each(cap, [&](uint64_t idx, std::span<const uint32_t>) {
    for (uint32_t y : deduced_[idx]) out.insert(y);
  });
  return out;
}

std::vector<uint64_t> KnowledgeTable::abduce(const LabelSet& labels,
                                             uint64_t cap) const {
  check_cap(space_.total_size(), cap, "abduce");
  std::vector<uint64_t> out;
  for (uint64_t i = 0; i < rows_.size(); ++i)
    if (deduce_intersects(i, labels)) out.push_back(i);
  return out;
}

ConceptSet KnowledgeTable::abduce_set(const LabelSet& labels, uint64_t cap) const {
  return ConceptSet::make_explicit(space_, abduce(labels, cap));
}

std::vector<uint64_t> KnowledgeTable::feasible_indices() const {
  std::vector<uint64_t> out;
  for (uint64_t i = 0; i < rows_.size(); ++i)
    if (!rows_[i].empty()) out.push_back(i);
  return out;
}

namespace {

KnowledgeTable compile_digit_sum(const DigitSum& p, uint64_t cap) {
  if (p.digits < 1 || p.base < 1) throw InvalidProgram("digit_sum: bad parameters");
  ConceptSpace space(std::vector<uint32_t>(p.digits, p.base));
  check_cap(space.total_size(), cap, "compile digit_sum");
  uint32_t num_labels = p.digits * (p.base - 1) + 1;
  OneHotBuilder b;
  std::vector<uint32_t> comps(p.digits, 0);
  for (uint64_t i = 0; i < space.total_size(); ++i) {
    space.components_of(i, comps);
    uint32_t sum = 0;
    for (uint32_t c : comps) sum += c;
    b.push(sum);
  }
  return KnowledgeTable(space, LabelSpace{num_labels}, std::move(b.rows));
}

KnowledgeTable compile_sum_parity(const SumParity& p, uint64_t cap) {
  if (p.digits < 1 || p.base < 1) throw InvalidProgram("sum_parity: bad parameters");
  ConceptSpace space(std::vector<uint32_t>(p.digits, p.base));
  check_cap(space.total_size(), cap, "compile sum_parity");
  OneHotBuilder b;
  std::vector<uint32_t> comps(p.digits, 0);
  for (uint64_t i = 0; i < space.total_size(); ++i) {
    space.components_of(i, comps);
    uint32_t sum = 0;
    for (uint32_t c : comps) sum += c;
    b.push(sum % 2);
  }
  return KnowledgeTable(space, LabelSpace{2}, std::move(b.rows));
}

KnowledgeTable compile_active_count(const ActiveCount& p, uint64_t cap) {
  if (p.symptoms < 1) throw InvalidProgram("active_count: bad parameters");
  ConceptSpace space(std::vector<uint32_t>(p.symptoms, 2));
  check_cap(space.total_size(), cap, "compile active_count");
  OneHotBuilder b;
  std::vector<uint32_t> comps(p.symptoms, 0);
  for (uint64_t i = 0; i < space.total_size(); ++i) {
    space.components_of(i, comps);
    uint32_t sum = 0;
    for (uint32_t c : comps) sum += c;
    b.push(sum);
  }
  return KnowledgeTable(space, LabelSpace{p.symptoms + 1}, std::move(b.rows));
}

KnowledgeTable compile_majority_vote(const MajorityVote& p, uint64_t cap) {
  if (p.voters < 1 || p.values < 1)
    throw InvalidProgram("majority_vote: bad parameters");
  if (p.priority.size() != p.values)
    throw InvalidProgram("majority_vote: priority must list every value");
  std::vector<bool> seen(p.values, false);
  for (uint32_t v : p.priority) {
    if (v >= p.values || seen[v])
      throw InvalidProgram("majority_vote: priority must be a permutation of value ids");
    seen[v] = true;
  }
  ConceptSpace space(std::vector<uint32_t>(p.voters, p.values));
  check_cap(space.total_size(), cap, "compile majority_vote");
  uint32_t num_labels = p.values + (p.conflict_label ? 1 : 0);
  OneHotBuilder b;
  std::vector<uint32_t> comps(p.voters, 0);
  std::vector<uint32_t> counts(p.values, 0);
  for (uint64_t i = 0; i < space.total_size(); ++i) {
    space.components_of(i, comps);
    std::fill(counts.begin(), counts.end(), 0);
    for (uint32_t c : comps) ++counts[c];
    uint32_t maxc = *std::max_element(counts.begin(), counts.end());
    // Conflict between the two strongest-priority values is checked first.
    if (p.conflict_label && p.values >= 2 && counts[p.priority[0]] == maxc &&
        counts[p.priority[1]] == maxc) {
      b.push(p.values);
      continue;
    }
    for (uint32_t v : p.priority) {
      if (counts[v] == maxc) {
        b.push(v);
        break;
      }
    }
  }
  return KnowledgeTable(space, LabelSpace{num_labels}, std::move(b.rows));
}

KnowledgeTable compile_attribute_rules(const AttributeRules& p, uint64_t cap) {
  if (p.num_labels < 1) throw InvalidProgram("attribute_rules: need labels");
  if (p.rules.empty()) throw InvalidProgram("attribute_rules: need at least one rule");
  ConceptSpace space(p.domain_sizes);
  check_cap(space.total_size(), cap, "compile attribute_rules");
  for (const auto& rule : p.rules) {
    if (rule.labels.empty())
      throw InvalidProgram("attribute_rules: rule without labels");
    for (uint32_t y : rule.labels)
      if (y >= p.num_labels) throw InvalidProgram("attribute_rules: label out of range");
    for (const auto& lit : rule.when) {
      if (lit.concept_index >= space.arity() ||
          lit.value >= space.domain_size(lit.concept_index))
        throw InvalidProgram("attribute_rules: literal out of range");
    }
  }
  std::vector<KnowledgeTable::Row> rows;
  rows.reserve(space.total_size());
  std::vector<uint32_t> comps(space.arity(), 0);
  std::vector<uint32_t> matched;
  for (uint64_t i = 0; i < space.total_size(); ++i) {
    space.components_of(i, comps);
    matched.clear();
    for (const auto& rule : p.rules) {
      bool fire = true;
      for (const auto& lit : rule.when) {
        bool eq = comps[lit.concept_index] == lit.value;
        if (eq == lit.negated) {
          fire = false;
          break;
        }
      }
      if (fire) matched.insert(matched.end(), rule.labels.begin(), rule.labels.end());
    }
    std::sort(matched.begin(), matched.end());
    matched.erase(std::unique(matched.begin(), matched.end()), matched.end());
    KnowledgeTable::Row row;
    if (!matched.empty()) {
      double w = 1.0 / static_cast<double>(matched.size());
      for (uint32_t y : matched) row.emplace_back(y, w);
    }
    rows.push_back(std::move(row));
  }
  return KnowledgeTable(space, LabelSpace{p.num_labels}, std::move(rows));
}

KnowledgeTable compile_explicit(const ExplicitTable& p, uint64_t cap) {
  ConceptSpace space(p.domain_sizes);
  check_cap(space.total_size(), cap, "compile explicit table");
  if (p.rows.size() != space.total_size())
    throw InvalidProgram("explicit table: row count must equal the space size");
  std::vector<KnowledgeTable::Row> rows;
  rows.reserve(p.rows.size());
  for (const auto& dense : p.rows) {
    if (dense.size() != p.num_labels)
      throw InvalidProgram("explicit table: row width must equal label count");
    rows.push_back(row_from_dense(dense));
  }
  return KnowledgeTable(space, LabelSpace{p.num_labels}, std::move(rows));
}

}  // namespace

KnowledgeTable compile(const KnowledgeProgram& program, uint64_t cap) {
  return std::visit(
      [cap](const auto& p) -> KnowledgeTable {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, DigitSum>) return compile_digit_sum(p, cap);
        else if constexpr (std::is_same_v<T, SumParity>) return compile_sum_parity(p, cap);
        else if constexpr (std::is_same_v<T, ActiveCount>) return compile_active_count(p, cap);
        else if constexpr (std::is_same_v<T, MajorityVote>) return compile_majority_vote(p, cap);
        else if constexpr (std::is_same_v<T, AttributeRules>) return compile_attribute_rules(p, cap);
        else return compile_explicit(p, cap);
      },
      program);
}

KnowledgeTable load_table(const std::filesystem::path& path,
                          std::vector<uint32_t> domain_sizes,
                          uint32_t num_labels, uint64_t cap) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open knowledge table file: " + path.string());
  ConceptSpace space(std::move(domain_sizes));
  check_cap(space.total_size(), cap, "load table");
  std::vector<std::vector<double>> rows;
  rows.reserve(space.total_size());
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> row;
    double w;
    while (ls >> w) row.push_back(w);
    if (!ls.eof()) throw ParseError("malformed weight in knowledge table", lineno);
    if (row.size() != num_labels)
      throw ParseError("knowledge table row width mismatch", lineno);
    rows.push_back(std::move(row));
  }
  if (rows.size() != space.total_size())
    throw DimensionMismatch("knowledge table has " + std::to_string(rows.size()) +
                            " rows, expected " + std::to_string(space.total_size()));
  ExplicitTable table{space.domain_sizes(), num_labels, std::move(rows)};
  return compile(KnowledgeProgram{std::move(table)}, cap);
}

std::vector<double> marginal_label_distribution(
    const FactorizedConceptDistribution& dist, const KnowledgeTable& table,
    uint64_t cap) {
  dist.validate(table.space());
  check_cap(table.space().total_size(), cap, "marginal_label_distribution");
  const ConceptSpace& space = table.space();
  std::vector<double> out(table.labels().num_labels, 0.0);
  std::vector<uint32_t> comps(space.arity(), 0);
  for (uint64_t i = 0; i < space.total_size(); ++i) {
    space.components_of(i, comps);
    double pc = 1.0;
    for (uint32_t j = 0; j < space.arity(); ++j) pc *= dist.per_concept[j][comps[j]];
    if (pc == 0.0) continue;
    for (auto& [y, w] : table.row(i)) out[y] += pc * w;
  }
  return out;
}

DeltaEstimates estimate_deltas(std::span<const GroundTruth> truths,
                               const KnowledgeTable& table) {
  if (truths.empty()) throw EmptyDataset("estimate_deltas: empty dataset");
  double ab = 0.0, de = 0.0;
  for (const auto& t : truths) {
    const auto& ties = table.deduce(t.concept_index);
    bool hit = std::find(ties.begin(), ties.end(), t.label) != ties.end();
    if (hit) {
      ab += 1.0;  // c* lies in the preimage of y* exactly when y* in deduce(c*)
      de += 1.0 / static_cast<double>(ties.size());
    }
  }
  double n = static_cast<double>(truths.size());
  return DeltaEstimates{ab / n, de / n};
}

}  // namespace coco
