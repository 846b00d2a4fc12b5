#include "coco/space.hpp"

#include <cmath>

#include "coco/errors.hpp"

namespace coco {

namespace {
// Hard limit on representable spaces; the configurable enumeration cap is
// enforced separately at use sites.
constexpr uint64_t kMaxTotalSize = uint64_t{1} << 62;
}  // namespace

ConceptSpace::ConceptSpace(std::vector<uint32_t> domain_sizes)
    : domain_sizes_(std::move(domain_sizes)) {
  if (domain_sizes_.empty())
    throw InvalidProgram("concept space needs at least one concept");
  total_size_ = 1;
  for (uint32_t v : domain_sizes_) {
    if (v == 0) throw InvalidProgram("concept domain size must be >= 1");
    if (total_size_ > kMaxTotalSize / v)
      throw CapExceeded("concept space size overflows the representable range");
    total_size_ *= v;
  }
}

uint64_t ConceptSpace::index_of(std::span<const uint32_t> components) const {
  if (components.size() != domain_sizes_.size())
    throw DimensionMismatch("concept vector has wrong arity");
  uint64_t idx = 0;
  for (size_t j = 0; j < components.size(); ++j) {
    if (components[j] >= domain_sizes_[j])
      throw DimensionMismatch("concept component out of domain");
    idx = idx * domain_sizes_[j] + components[j];
  }
  return idx;
}

void ConceptSpace::components_of(uint64_t index, std::span<uint32_t> out) const {
  for (size_t j = domain_sizes_.size(); j-- > 0;) {
    out[j] = static_cast<uint32_t>(index % domain_sizes_[j]);
    index /= domain_sizes_[j];
  }
}

std::vector<uint32_t> ConceptSpace::components_of(uint64_t index) const {
  std::vector<uint32_t> out(domain_sizes_.size());
  components_of(index, out);
  return out;
}

void FactorizedConceptDistribution::validate(const ConceptSpace& space) const {
  if (per_concept.size() != space.arity())
    throw DimensionMismatch("concept distribution arity mismatch");
  for (uint32_t j = 0; j < space.arity(); ++j) {
    const auto& p = per_concept[j];
    if (p.size() != space.domain_size(j))
      throw DimensionMismatch("concept distribution domain mismatch");
    double sum = 0.0;
    for (double x : p) {
      if (!(x >= 0.0) || !std::isfinite(x))
        throw DataError("concept probability must be finite and nonnegative");
      sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-6)
      throw DataError("concept probabilities must sum to 1 within 1e-6");
  }
}

}  // namespace coco
