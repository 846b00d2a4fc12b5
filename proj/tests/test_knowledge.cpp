#include <cmath>
#include <filesystem>
#include <fstream>

#include "coco/errors.hpp"
#include "coco/knowledge.hpp"
#include "coco/rng.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace coco;

namespace {

// Brute-force oracle: digit pairs under base `V` whose sum lies in `sums`.
std::vector<uint64_t> digit_pairs_with_sum(uint32_t V, const std::vector<uint32_t>& sums) {
  std::vector<uint64_t> out;
  for (uint32_t a = 0; a < V; ++a)
    for (uint32_t b = 0; b < V; ++b)
      for (uint32_t y : sums)
        if (a + b == y) out.push_back(a * V + b);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("digit_sum compiles to one-hot rows") {
  KnowledgeTable t = compile(DigitSum{2, 10}, kDefaultCap);
  CHECK(t.space().total_size() == 100);
  CHECK(t.labels().num_labels == 19);
  uint64_t idx = t.space().index_of(std::vector<uint32_t>{7, 5});
  REQUIRE(t.row(idx).size() == 1);
  CHECK(t.row(idx)[0].first == 12);
  CHECK(t.row(idx)[0].second == doctest::Approx(1.0));
  CHECK(t.deduce(idx) == std::vector<uint32_t>{12});
}

TEST_CASE("active_count maps symptom vectors to severity") {
  KnowledgeTable t = compile(ActiveCount{4}, kDefaultCap);
  CHECK(t.labels().num_labels == 5);
  uint64_t idx = t.space().index_of(std::vector<uint32_t>{1, 0, 1, 0});
  CHECK(t.deduce(idx) == std::vector<uint32_t>{2});
}

TEST_CASE("shared signatures split mass equally") {
  KnowledgeTable t = compile(testing::shared_pair_rules(), kDefaultCap);
  // signature 6 = bits 011 -> components {0,1,1}
  uint64_t idx = t.space().index_of(std::vector<uint32_t>{0, 1, 1});
  REQUIRE(t.row(idx).size() == 2);
  CHECK(t.row(idx)[0].second == doctest::Approx(0.5));
  CHECK(t.row(idx)[1].second == doctest::Approx(0.5));
  CHECK(t.deduce(idx) == std::vector<uint32_t>{6, 7});
}

TEST_CASE("all-zero rows are infeasible and deduce to nothing") {
  ExplicitTable p;
  p.domain_sizes = {2};
  p.num_labels = 2;
  p.rows = {{0.0, 0.0}, {1.0, 0.0}};
  KnowledgeTable t = compile(KnowledgeProgram{p}, kDefaultCap);
  CHECK(t.deduce(0).empty());
  CHECK_FALSE(t.feasible(0));
  CHECK(t.deduce(1) == std::vector<uint32_t>{0});
}

TEST_CASE("abduce matches brute-force preimage enumeration") {
  KnowledgeTable t = compile(DigitSum{2, 10}, kDefaultCap);
  LabelSet zero(19);
  zero.insert(0);
  CHECK(t.abduce(zero, kDefaultCap) == std::vector<uint64_t>{0});

  LabelSet one(19);
  one.insert(1);
  CHECK(t.abduce(one, kDefaultCap) == digit_pairs_with_sum(10, {1}));

  for (uint32_t y = 0; y < 19; ++y) {
    LabelSet s(19);
    s.insert(y);
    auto got = t.abduce(s, kDefaultCap);
    CHECK(got == digit_pairs_with_sum(10, {y}));
    CHECK(got.size() == std::min(y, 18 - y) + 1);
  }
}

TEST_CASE("deduce_image unions per-row deductions") {
  KnowledgeTable t = compile(DigitSum{2, 10}, kDefaultCap);
  ConceptSet two = ConceptSet::make_explicit(
      t.space(), {t.space().index_of(std::vector<uint32_t>{2, 3}),
                  t.space().index_of(std::vector<uint32_t>{4, 4})});
  LabelSet img = t.deduce_image(two, kDefaultCap);
  CHECK(img.values() == std::vector<uint32_t>{5, 8});

  CHECK(t.deduce_image(ConceptSet::make_empty(t.space()), kDefaultCap).empty());

  // the full space reaches every sum
  LabelSet all = t.deduce_image(ConceptSet::make_full(t.space()), kDefaultCap);
  CHECK(all.count() == 19);
}

TEST_CASE("marginal label distribution is exact") {
  KnowledgeTable sum = compile(DigitSum{2, 10}, kDefaultCap);

  FactorizedConceptDistribution onehot;
  onehot.per_concept = {std::vector<double>(10, 0.0), std::vector<double>(10, 0.0)};
  onehot.per_concept[0][7] = 1.0;
  onehot.per_concept[1][5] = 1.0;
  auto p = marginal_label_distribution(onehot, sum, kDefaultCap);
  CHECK(p[12] == doctest::Approx(1.0));

  FactorizedConceptDistribution uniform;
  uniform.per_concept = {std::vector<double>(10, 0.1), std::vector<double>(10, 0.1)};
  auto pu = marginal_label_distribution(uniform, sum, kDefaultCap);
  for (uint32_t y = 0; y < 19; ++y)
    CHECK(pu[y] == doctest::Approx((std::min(y, 18 - y) + 1) / 100.0).epsilon(1e-9));

  KnowledgeTable parity = compile(SumParity{2, 10}, kDefaultCap);
  auto pp = marginal_label_distribution(uniform, parity, kDefaultCap);
  CHECK(pp[0] == doctest::Approx(0.5));
  CHECK(pp[1] == doctest::Approx(0.5));
}

TEST_CASE("marginal agrees with joint enumeration oracle on random inputs") {
  KnowledgeTable t = compile(testing::shared_pair_rules(), kDefaultCap);
  Rng rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    FactorizedConceptDistribution dist;
    dist.per_concept.resize(3);
    for (auto& pc : dist.per_concept) {
      pc = {rng.uniform() + 0.01, rng.uniform() + 0.01};
      double z = pc[0] + pc[1];
      pc[0] /= z;
      pc[1] /= z;
    }
    auto fast = marginal_label_distribution(dist, t, kDefaultCap);
    std::vector<double> slow(10, 0.0);
    for (uint64_t i = 0; i < t.space().total_size(); ++i) {
      auto comps = t.space().components_of(i);
      double pc = 1.0;
      for (uint32_t j = 0; j < 3; ++j) pc *= dist.per_concept[j][comps[j]];
      for (uint32_t y = 0; y < 10; ++y) slow[y] += pc * t.weight(i, y);
    }
    for (uint32_t y = 0; y < 10; ++y)
      CHECK(fast[y] == doctest::Approx(slow[y]).epsilon(1e-9));
  }
}

TEST_CASE("marginal matches the joint oracle on a ten-thousand-row space") {
  KnowledgeTable t = compile(DigitSum{4, 10}, kDefaultCap);
  REQUIRE(t.space().total_size() == 10'000);
  Rng rng(41);
  FactorizedConceptDistribution dist;
  dist.per_concept.resize(4);
  for (auto& pc : dist.per_concept) {
    pc.resize(10);
    double z = 0;
    for (auto& p : pc) {
      p = rng.uniform() + 0.01;
      z += p;
    }
    for (auto& p : pc) p /= z;
  }
  auto fast = marginal_label_distribution(dist, t, kDefaultCap);
  std::vector<double> slow(t.labels().num_labels, 0.0);
  for (uint64_t i = 0; i < t.space().total_size(); ++i) {
    auto comps = t.space().components_of(i);
    double pc = 1.0;
    for (uint32_t j = 0; j < 4; ++j) pc *= dist.per_concept[j][comps[j]];
    uint32_t sum = comps[0] + comps[1] + comps[2] + comps[3];
    slow[sum] += pc;
  }
  double total = 0.0;
  for (uint32_t y = 0; y < slow.size(); ++y) {
    CHECK(fast[y] == doctest::Approx(slow[y]).epsilon(1e-9));
    total += fast[y];
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("delta estimation: complete deterministic knowledge") {
  KnowledgeTable t = compile(DigitSum{2, 10}, kDefaultCap);
  std::vector<GroundTruth> truths;
  for (uint64_t i = 0; i < t.space().total_size(); ++i)
    truths.push_back({i, t.deduce(i)[0]});
  auto d = estimate_deltas(truths, t);
  CHECK(d.abductive == doctest::Approx(1.0));
  CHECK(d.deductive == doctest::Approx(1.0));
}

TEST_CASE("delta estimation: two-way shared pairs give 0.8 deductive") {
  KnowledgeTable t = compile(testing::shared_pair_rules(), kDefaultCap);
  // one record per class, uniform class prior
  std::vector<GroundTruth> truths;
  auto sig_index = [&](uint32_t bits) {
    std::vector<uint32_t> c = {bits & 1u, (bits >> 1) & 1u, (bits >> 2) & 1u};
    return t.space().index_of(c);
  };
  for (uint32_t y = 0; y < 6; ++y) truths.push_back({sig_index(y), y});
  truths.push_back({sig_index(6), 6});
  truths.push_back({sig_index(6), 7});
  truths.push_back({sig_index(7), 8});
  truths.push_back({sig_index(7), 9});
  auto d = estimate_deltas(truths, t);
  // oracle: 6/10 * 1 + 4/10 * (1/2)
  CHECK(d.deductive == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(d.abductive == doctest::Approx(1.0));
}

TEST_CASE("majority vote: conflict and priority tie-breaking") {
  MajorityVote p;
  p.voters = 5;
  p.values = 4;
  p.priority = {0, 1, 2, 3};
  KnowledgeTable t = compile(KnowledgeProgram{p}, kDefaultCap);
  CHECK(t.labels().num_labels == 5);

  // both strongest-priority values tie at the max -> conflict label 4
  uint64_t conflict = t.space().index_of(std::vector<uint32_t>{0, 0, 1, 1, 2});
  CHECK(t.deduce(conflict) == std::vector<uint32_t>{4});

  // tie among lower-priority values resolves by priority order
  uint64_t tie = t.space().index_of(std::vector<uint32_t>{2, 2, 3, 3, 0});
  CHECK(t.deduce(tie) == std::vector<uint32_t>{2});

  uint64_t clear = t.space().index_of(std::vector<uint32_t>{3, 3, 3, 1, 0});
  CHECK(t.deduce(clear) == std::vector<uint32_t>{3});

  MajorityVote bad = p;
  bad.priority = {0, 0, 2, 3};
  CHECK_THROWS_AS(compile(KnowledgeProgram{bad}, kDefaultCap), InvalidProgram);
}

TEST_CASE("compilation is deterministic") {
  KnowledgeTable a = compile(testing::shared_pair_rules(), kDefaultCap);
  KnowledgeTable b = compile(testing::shared_pair_rules(), kDefaultCap);
  CHECK(a == b);
}

TEST_CASE("cap violations are reported") {
  CHECK_THROWS_AS(compile(DigitSum{2, 10}, 50), CapExceeded);
  KnowledgeTable t = compile(DigitSum{2, 10}, kDefaultCap);
  LabelSet all = LabelSet::full(19);
  CHECK_THROWS_AS(t.abduce(all, 10), CapExceeded);
}

TEST_CASE("explicit tables load from tabular text") {
  auto dir = std::filesystem::temp_directory_path() / "coco_kt_test";
  std::filesystem::create_directories(dir);
  auto path = dir / "table.txt";
  {
    std::ofstream out(path);
    out << "# two binary concepts, three labels\n";
    out << "1 0 0\n0.5 0.5 0\n0 0 0\n0 0 1\n";
  }
  KnowledgeTable t = load_table(path, {2, 2}, 3, kDefaultCap);
  CHECK(t.deduce(0) == std::vector<uint32_t>{0});
  CHECK(t.deduce(1) == std::vector<uint32_t>{0, 1});
  CHECK(t.deduce(2).empty());
  CHECK(t.deduce(3) == std::vector<uint32_t>{2});

  {
    std::ofstream out(path);
    out << "1 0 0\n0.5 0.6 0\n0 0 0\n0 0 1\n";  // second row sums to 1.1
  }
  CHECK_THROWS_AS(load_table(path, {2, 2}, 3, kDefaultCap), DataError);
}
