#include <algorithm>
#include <cmath>

#include "coco/conformal.hpp"
#include "coco/errors.hpp"
#include "coco/pipeline.hpp"
#include "coco/rng.hpp"
#include "coco/synthio.hpp"
#include "doctest.h"

using namespace coco;

namespace { constexpr uint64_t kCap = 1'000'000; }

TEST_CASE("nonconformity score is a clamped negative log") {
  CHECK(nonconformity_score(1.0) == doctest::Approx(0.0));
  CHECK(nonconformity_score(std::exp(-2.0)) == doctest::Approx(2.0));
  CHECK(nonconformity_score(0.0) == doctest::Approx(-std::log(1e-12)));
  CHECK(nonconformity_score(0.0) == doctest::Approx(27.631021).epsilon(1e-6));
  CHECK_THROWS_AS(nonconformity_score(-0.1), DataError);
}

TEST_CASE("quantile rank uses the finite-sample correction") {
  std::vector<double> scores = {0.1, 0.2, 0.3, 0.4};
  // r = ceil(5 * 0.75) = 4 -> largest score
  CHECK(calibrate_quantile(scores, 0.25) == doctest::Approx(0.4));
  // r = ceil(5 * 0.9) = 5 > 4 -> infinite threshold, full set
  CHECK(std::isinf(calibrate_quantile(scores, 0.1)));

  std::vector<double> nine = {9, 1, 5, 3, 7, 2, 8, 4, 6};
  // n = 9, alpha = 0.1 -> r = 9 -> 9th smallest
  CHECK(calibrate_quantile(nine, 0.1) == doctest::Approx(9.0));

  CHECK_THROWS_AS(calibrate_quantile({}, 0.1), EmptyCalibration);
  CHECK_THROWS_AS(calibrate_quantile(scores, 0.0), ConfigError);
}

TEST_CASE("quantile is order-independent") {
  Rng rng(3);
  std::vector<double> scores;
  for (int i = 0; i < 200; ++i) scores.push_back(rng.uniform() * 10);
  double q = calibrate_quantile(scores, 0.1);
  std::vector<double> shuffled = scores;
  for (size_t i = shuffled.size() - 1; i > 0; --i)
    std::swap(shuffled[i], shuffled[rng.below(i + 1)]);
  CHECK(calibrate_quantile(shuffled, 0.1) == q);
}

TEST_CASE("threshold is monotone in the level") {
  Rng rng(11);
  std::vector<double> scores;
  for (int i = 0; i < 150; ++i) scores.push_back(rng.uniform() * 5);
  double prev = std::numeric_limits<double>::infinity();
  for (double level : {0.02, 0.05, 0.1, 0.2, 0.4, 0.8}) {
    double q = calibrate_quantile(scores, level);
    CHECK(q <= prev);
    prev = q;
  }
}

TEST_CASE("label sets include threshold ties and honor the fallback") {
  std::vector<double> probs = {0.7, 0.2, 0.1};
  LabelSet full = conformal_label_set(probs, std::numeric_limits<double>::infinity());
  CHECK(full.count() == 3);

  double q = nonconformity_score(0.2);
  LabelSet s = conformal_label_set(probs, q);
  CHECK(s.contains(0));
  CHECK(s.contains(1));  // tie at the threshold is included
  CHECK_FALSE(s.contains(2));

  std::vector<double> onehot = {0.0, 1.0, 0.0};
  CHECK(conformal_label_set(onehot, 0.0).contains(1));
}

TEST_CASE("per-concept sets mirror label sets") {
  std::vector<double> onehot(10, 0.0);
  onehot[3] = 1.0;
  auto s = per_concept_set(onehot, 1.0);
  CHECK(std::find(s.begin(), s.end(), 3u) != s.end());

  std::vector<double> uniform(10, 0.1);
  CHECK(per_concept_set(uniform, nonconformity_score(0.1)).size() == 10);

  std::vector<double> probs = {0.5, 0.3, 0.2};
  auto top = per_concept_set(probs, nonconformity_score(0.3));
  CHECK(top == std::vector<uint32_t>{0, 1});
}

TEST_CASE("product concept set is a lazy Cartesian product") {
  ConceptSpace space({10, 10});
  ConceptSet s = product_concept_set(space, {{3}, {5, 7}});
  CHECK(s.cardinality() == 2);
  auto members = s.materialize(kCap);
  CHECK(members == std::vector<uint64_t>{35, 37});
  CHECK(s.contains(std::vector<uint32_t>{3, 5}));
  CHECK_FALSE(s.contains(std::vector<uint32_t>{4, 5}));

  ConceptSet empty = product_concept_set(space, {{3}, {}});
  CHECK(empty.empty());

  auto split = bonferroni_split(0.1, 2);
  CHECK(split == std::vector<double>{0.05, 0.05});
}

TEST_CASE("product enumeration respects the cap") {
  ConceptSpace space({100, 100, 100});
  ConceptSet full = ConceptSet::make_full(space);
  CHECK(full.cardinality() == 1'000'000);
  CHECK_THROWS_AS(full.materialize(1000), CapExceeded);
}

TEST_CASE("bonferroni product sets cover across concept counts") {
  // beta_j = beta / k keeps joint coverage >= 1 - beta; more concepts mean
  // smaller per-concept levels, never less joint coverage.
  for (uint32_t k : {2u, 4u, 8u}) {
    KnowledgeTable t = compile(DigitSum{k, 2}, 1'000'000);
    PredictorSpec spec;
    spec.temperature = 1.0;
    spec.logit_noise = 1.0;
    double covered = 0.0, total = 0.0;
    for (uint64_t seed : {1, 2, 3}) {
      auto [cal, test] = generate(t, spec, 1000, 4000, seed, 1'000'000);
      CalibrationState state = calibrate_records(cal, t, 0.1, 0.1, false);
      for (const auto& r : test) {
        bool in = true;
        for (uint32_t j = 0; j < k; ++j)
          if (nonconformity_score(r.concept_probs[j][(*r.c_star)[j]]) >
              state.quantile.q_concepts[j])
            in = false;
        covered += in;
        total += 1.0;
      }
    }
    INFO("k = ", k);
    CHECK(covered / total >= 1.0 - 0.1 - 0.015);
  }
}

TEST_CASE("full-vector concept set equals the brute-force filter") {
  ConceptSpace space({4, 3, 3});
  Rng rng(5);
  for (int trial = 0; trial < 10; ++trial) {
    FactorizedConceptDistribution dist;
    dist.per_concept.resize(3);
    for (uint32_t j = 0; j < 3; ++j) {
      dist.per_concept[j].resize(space.domain_size(j));
      double z = 0;
      for (auto& p : dist.per_concept[j]) {
        p = rng.uniform() + 0.01;
        z += p;
      }
      for (auto& p : dist.per_concept[j]) p /= z;
    }
    double q = rng.uniform() * 8.0;
    ConceptSet fast = full_vector_concept_set(dist, space, q, kCap);
    std::vector<uint64_t> slow;
    for (uint64_t i = 0; i < space.total_size(); ++i) {
      auto comps = space.components_of(i);
      if (full_vector_score(dist, comps) <= q) slow.push_back(i);
    }
    CHECK(fast.materialize(kCap) == slow);
  }
}
