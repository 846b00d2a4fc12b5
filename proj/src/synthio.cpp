#include "coco/synthio.hpp"

#include <algorithm>
#include <cmath>

#include "coco/errors.hpp"
#include "coco/rng.hpp"

namespace coco {

void PredictorSpec::validate(const ConceptSpace& space) const {
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0");
  if (!(logit_noise >= 0.0)) throw ConfigError("logit_noise must be >= 0");
  if (!shortcut.empty() && shortcut.size() != space.arity())
    throw DimensionMismatch("shortcut list must match the concept arity");
  for (uint32_t j = 0; j < shortcut.size(); ++j) {
    if (!shortcut[j]) continue;
    const auto& perm = *shortcut[j];
    if (perm.size() != space.domain_size(j))
      throw ConfigError("shortcut permutation has wrong length");
    std::vector<bool> seen(perm.size(), false);
    for (uint32_t v : perm) {
      if (v >= perm.size() || seen[v])
        throw ConfigError("shortcut must be a permutation of the value domain");
      seen[v] = true;
    }
  }
  if (!confusion.empty() && confusion.size() != space.arity())
    throw DimensionMismatch("confusion list must match the concept arity");
  for (uint32_t j = 0; j < confusion.size(); ++j) {
    if (!confusion[j]) continue;
    const auto& rows = *confusion[j];
    if (rows.size() != space.domain_size(j))
      throw ConfigError("confusion needs one row per value");
    for (const auto& row : rows) {
      if (row.size() != space.domain_size(j))
        throw ConfigError("confusion row has wrong width");
      double sum = 0.0;
      for (double p : row) {
        if (!(p >= 0.0)) throw ConfigError("confusion entries must be >= 0");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-9)
        throw ConfigError("confusion rows must sum to 1");
    }
  }
}

namespace {

struct PriorSampler {
  const KnowledgeTable& table;
  PredictorSpec::Prior kind;
  std::vector<uint64_t> feasible;
  // LabelUniform: labels with nonempty preimage and those preimages.
  std::vector<uint32_t> labels;
  std::vector<std::vector<uint64_t>> preimages;

  PriorSampler(const KnowledgeTable& t, PredictorSpec::Prior k, uint64_t cap)
      : table(t), kind(k) {
    feasible = table.feasible_indices();
    if (feasible.empty())
      throw DataError("prior has no feasible concept vectors to draw from");
    if (kind == PredictorSpec::Prior::LabelUniform) {
      LabelSet one(table.labels().num_labels);
      for (uint32_t y = 0; y < table.labels().num_labels; ++y) {
        LabelSet single(table.labels().num_labels);
        single.insert(y);
        auto pre = table.abduce(single, cap);
        if (!pre.empty()) {
          labels.push_back(y);
          preimages.push_back(std::move(pre));
        }
      }
      if (labels.empty()) throw DataError("no label has a nonempty preimage");
    }
  }

  uint64_t draw(Rng& rng) const {
    if (kind == PredictorSpec::Prior::UniformFeasible)
      return feasible[rng.below(feasible.size())];
    size_t li = rng.below(labels.size());
    const auto& pre = preimages[li];
    return pre[rng.below(pre.size())];
  }
};

ExampleRecord make_record(const KnowledgeTable& table, const PredictorSpec& spec,
                          const PriorSampler& prior, uint64_t seed,
                          uint64_t index, uint64_t cap) {
  const ConceptSpace& space = table.space();
  Rng rng(mix_seed(seed, index));
  uint64_t c_idx = prior.draw(rng);
  auto comps = space.components_of(c_idx);

  const auto& row = table.row(c_idx);
  uint32_t y_star;
  if (row.size() == 1) {
    y_star = row[0].first;
  } else {
    // Incomplete knowledge: the row's split mass is the sampling law.
    std::vector<double> w(row.size());
    for (size_t i = 0; i < row.size(); ++i) w[i] = row[i].second;
    y_star = row[rng.categorical(w)].first;
  }

  ExampleRecord rec;
  rec.id = "g" + std::to_string(seed) + "-" + std::to_string(index);
  rec.concept_probs.resize(space.arity());
  for (uint32_t j = 0; j < space.arity(); ++j) {
    uint32_t target = comps[j];
    if (j < spec.shortcut.size() && spec.shortcut[j]) target = (*spec.shortcut[j])[target];
    const uint32_t V = space.domain_size(j);
    auto& probs = rec.concept_probs[j];
    if (j < spec.confusion.size() && spec.confusion[j]) {
      probs = (*spec.confusion[j])[target];
      continue;
    }
    std::vector<double> logits(V, 0.0);
    logits[target] = 1.0 / std::max(spec.temperature, 1e-9);
    if (spec.logit_noise > 0.0)
      for (uint32_t v = 0; v < V; ++v) logits[v] += spec.logit_noise * rng.normal();
    double top = *std::max_element(logits.begin(), logits.end());
    probs.resize(V);
    double z = 0.0;
    for (uint32_t v = 0; v < V; ++v) {
      probs[v] = std::exp(logits[v] - top);
      z += probs[v];
    }
    for (auto& p : probs) p /= z;
  }
  rec.label_probs = marginal_label_distribution(rec.concept_distribution(), table, cap);
  rec.c_star = std::move(comps);
  rec.y_star = y_star;
  return rec;
}

}  // namespace

std::pair<std::vector<ExampleRecord>, std::vector<ExampleRecord>> generate(
    const KnowledgeTable& table, const PredictorSpec& spec, uint64_t n_cal,
    uint64_t n_test, uint64_t seed, uint64_t cap) {
  if (n_cal == 0 || n_test == 0)
    throw ConfigError("generate: need at least one calibration and one test record");
  if (table.space().total_size() > cap)
    throw CapExceeded("generate: concept space exceeds enumeration cap");
  spec.validate(table.space());
  PriorSampler prior(table, spec.prior, cap);

  std::vector<ExampleRecord> all(n_cal + n_test);
  for (uint64_t i = 0; i < all.size(); ++i)
    all[i] = make_record(table, spec, prior, seed, i, cap);

  std::vector<ExampleRecord> cal(all.begin(), all.begin() + n_cal);
  std::vector<ExampleRecord> test(all.begin() + n_cal, all.end());
  return {std::move(cal), std::move(test)};
}

void validate_records(std::vector<ExampleRecord>& records,
                      const KnowledgeTable& table, bool strict, uint64_t cap) {
  const ConceptSpace& space = table.space();
  for (auto& r : records) {
    if (r.concept_probs.size() != space.arity())
      throw DimensionMismatch("record " + r.id + ": concept arity mismatch");
    r.concept_distribution().validate(space);
    if (r.y_star >= table.labels().num_labels)
      throw DimensionMismatch("record " + r.id + ": label out of range");
    if (r.label_probs) {
      if (r.label_probs->size() != table.labels().num_labels)
        throw DimensionMismatch("record " + r.id + ": label_probs width mismatch");
      double sum = 0.0;
      for (double p : *r.label_probs) {
        if (!(p >= 0.0)) throw DataError("record " + r.id + ": negative label prob");
        sum += p;
      }
      if (std::abs(sum - 1.0) > 1e-6)
        throw DataError("record " + r.id + ": label_probs must sum to 1");
    } else {
      r.label_probs = marginal_label_distribution(r.concept_distribution(), table, cap);
    }
    if (r.c_star) {
      if (r.c_star->size() != space.arity())
        throw DimensionMismatch("record " + r.id + ": c_star arity mismatch");
      uint64_t idx = space.index_of(*r.c_star);  // validates component ranges
      if (strict && table.weight(idx, r.y_star) == 0.0)
        throw SupportViolation("record " + r.id +
                               ": (c*, y*) outside the knowledge support");
    }
  }
}

std::vector<ExampleRecord> ingest(const std::filesystem::path& path,
                                  const KnowledgeTable& table, bool strict,
                                  uint64_t cap) {
  auto records = read_records(path);
  validate_records(records, table, strict, cap);
  return records;
}

}  // namespace coco
