#include "coco/sets.hpp"

namespace coco {

ConceptSet ConceptSet::make_explicit(const ConceptSpace& space,
                                     std::vector<uint64_t> sorted_indices) {
  ConceptSet s;
  s.kind_ = Kind::Explicit;
  s.space_ = space;
  s.members_ = std::move(sorted_indices);
  if (!std::is_sorted(s.members_.begin(), s.members_.end()))
    std::sort(s.members_.begin(), s.members_.end());
  s.members_.erase(std::unique(s.members_.begin(), s.members_.end()),
                   s.members_.end());
  for (uint64_t idx : s.members_)
    if (idx >= space.total_size())
      throw DimensionMismatch("concept index out of range");
  return s;
}

ConceptSet ConceptSet::make_product(const ConceptSpace& space,
                                    std::vector<std::vector<uint32_t>> factors) {
  if (factors.size() != space.arity())
    throw DimensionMismatch("product set needs one factor per concept");
  for (uint32_t j = 0; j < space.arity(); ++j) {
    auto& f = factors[j];
    std::sort(f.begin(), f.end());
    f.erase(std::unique(f.begin(), f.end()), f.end());
    for (uint32_t v : f)
      if (v >= space.domain_size(j))
        throw DimensionMismatch("factor value out of domain");
    if (f.empty()) return make_empty(space);  // any empty factor -> empty set
  }
  ConceptSet s;
  s.kind_ = Kind::Product;
  s.space_ = space;
  s.factors_ = std::move(factors);
  return s;
}

ConceptSet ConceptSet::make_empty(const ConceptSpace& space) {
  ConceptSet s;
  s.kind_ = Kind::Explicit;
  s.space_ = space;
  return s;
}

ConceptSet ConceptSet::make_full(const ConceptSpace& space) {
  std::vector<std::vector<uint32_t>> factors(space.arity());
  for (uint32_t j = 0; j < space.arity(); ++j) {
    factors[j].resize(space.domain_size(j));
    for (uint32_t v = 0; v < space.domain_size(j); ++v) factors[j][v] = v;
  }
  return make_product(space, std::move(factors));
}

uint64_t ConceptSet::cardinality() const {
  if (kind_ == Kind::Explicit) return members_.size();
  uint64_t n = 1;
  for (const auto& f : factors_) n *= f.size();  // bounded by total_size
  return n;
}

bool ConceptSet::contains_index(uint64_t index) const {
  if (kind_ == Kind::Explicit)
    return std::binary_search(members_.begin(), members_.end(), index);
  auto comps = space_.components_of(index);
  return contains(comps);
}

bool ConceptSet::contains(std::span<const uint32_t> components) const {
  if (kind_ == Kind::Explicit)
    return std::binary_search(members_.begin(), members_.end(),
                              space_.index_of(components));
  for (uint32_t j = 0; j < space_.arity(); ++j)
    if (!std::binary_search(factors_[j].begin(), factors_[j].end(),
                            components[j]))
      return false;
  return true;
}

std::vector<uint64_t> ConceptSet::materialize(uint64_t cap) const {
  if (kind_ == Kind::Explicit) {
    require_within(cap);
    return members_;
  }
  std::vector<uint64_t> out;
  out.reserve(cardinality());
  for_each(cap, [&](uint64_t idx, std::span<const uint32_t>) { out.push_back(idx); });
  return out;
}

}  // namespace coco
