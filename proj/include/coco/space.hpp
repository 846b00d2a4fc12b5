#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace coco {

struct LabelSpace {
  uint32_t num_labels = 0;
};

// Finite product domain of k concepts; concept vectors are addressed by a
// mixed-radix index with the first concept most significant.
class ConceptSpace {
 public:
  ConceptSpace() = default;
  explicit ConceptSpace(std::vector<uint32_t> domain_sizes);

  uint32_t arity() const { return static_cast<uint32_t>(domain_sizes_.size()); }
  uint32_t domain_size(uint32_t j) const { return domain_sizes_[j]; }
  const std::vector<uint32_t>& domain_sizes() const { return domain_sizes_; }
  uint64_t total_size() const { return total_size_; }

  uint64_t index_of(std::span<const uint32_t> components) const;
  void components_of(uint64_t index, std::span<uint32_t> out) const;
  std::vector<uint32_t> components_of(uint64_t index) const;

  bool operator==(const ConceptSpace& other) const {
    return domain_sizes_ == other.domain_sizes_;
  }

 private:
  std::vector<uint32_t> domain_sizes_;
  uint64_t total_size_ = 0;
};

using ConceptVector = std::vector<uint32_t>;

// Per-concept categorical distributions p(C_j | x); concepts are
// conditionally independent given the input.
struct FactorizedConceptDistribution {
  std::vector<std::vector<double>> per_concept;

  uint32_t arity() const { return static_cast<uint32_t>(per_concept.size()); }
  void validate(const ConceptSpace& space) const;  // sums to 1 within 1e-6
};

}  // namespace coco
