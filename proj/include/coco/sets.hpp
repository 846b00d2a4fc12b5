#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "coco/errors.hpp"
#include "coco/space.hpp"

namespace coco {

// Bitset over a fixed label universe.
class LabelSet {
 public:
  LabelSet() = default;
  explicit LabelSet(uint32_t universe)
      : universe_(universe), words_((universe + 63) / 64, 0) {}

  static LabelSet full(uint32_t universe) {
    LabelSet s(universe);
    for (uint32_t y = 0; y < universe; ++y) s.insert(y);
    return s;
  }

  uint32_t universe() const { return universe_; }

  void insert(uint32_t y) { words_[y >> 6] |= (uint64_t{1} << (y & 63)); }

  bool contains(uint32_t y) const {
    return y < universe_ && (words_[y >> 6] >> (y & 63)) & 1;
  }

  uint32_t count() const {
    uint32_t c = 0;
    for (uint64_t w : words_) c += static_cast<uint32_t>(__builtin_popcountll(w));
    return c;
  }

  bool empty() const {
    for (uint64_t w : words_)
      if (w) return false;
    return true;
  }

  bool intersects(const LabelSet& other) const {
    for (size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & other.words_[i]) return true;
    return false;
  }

  LabelSet intersect(const LabelSet& other) const {
    LabelSet out(universe_);
    for (size_t i = 0; i < words_.size(); ++i)
      out.words_[i] = words_[i] & other.words_[i];
    return out;
  }

  void unite(const LabelSet& other) {
    for (size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
  }

  std::vector<uint32_t> values() const {
    std::vector<uint32_t> out;
    out.reserve(count());
    for (uint32_t y = 0; y < universe_; ++y)
      if (contains(y)) out.push_back(y);
    return out;
  }

  bool is_subset_of(const LabelSet& other) const {
    for (size_t i = 0; i < words_.size(); ++i)
      if (words_[i] & ~other.words_[i]) return false;
    return true;
  }

  bool operator==(const LabelSet& other) const {
    return universe_ == other.universe_ && words_ == other.words_;
  }

 private:
  uint32_t universe_ = 0;
  std::vector<uint64_t> words_;
};

// A set of concept vectors, either an explicit sorted list of mixed-radix
// indices or a lazy Cartesian product of per-concept value sets.  Products
// report their cardinality without materializing; enumeration is on demand
// and guarded by the enumeration cap.
class ConceptSet {
 public:
  enum class Kind { Explicit, Product };

  ConceptSet() = default;

  static ConceptSet make_explicit(const ConceptSpace& space,
                                  std::vector<uint64_t> sorted_indices);
  static ConceptSet make_product(const ConceptSpace& space,
                                 std::vector<std::vector<uint32_t>> factors);
  static ConceptSet make_empty(const ConceptSpace& space);
  static ConceptSet make_full(const ConceptSpace& space);

  Kind kind() const { return kind_; }
  const ConceptSpace& space() const { return space_; }
  uint64_t cardinality() const;
  bool empty() const { return cardinality() == 0; }

  bool contains_index(uint64_t index) const;
  bool contains(std::span<const uint32_t> components) const;

  const std::vector<uint64_t>& members() const { return members_; }
  const std::vector<std::vector<uint32_t>>& factors() const { return factors_; }

  // Ascending-index enumeration.  Throws CapExceeded if the set is larger
  // than `cap`.
  template <typename F>
  void for_each(uint64_t cap, F&& fn) const {
    require_within(cap);
    const uint32_t k = space_.arity();
    std::vector<uint32_t> comps(k);
    if (kind_ == Kind::Explicit) {
      for (uint64_t idx : members_) {
        space_.components_of(idx, comps);
        fn(idx, std::span<const uint32_t>(comps));
      }
      return;
    }
    if (cardinality() == 0) return;
    std::vector<uint32_t> pos(k, 0);
    for (;;) {
      for (uint32_t j = 0; j < k; ++j) comps[j] = factors_[j][pos[j]];
      fn(space_.index_of(comps), std::span<const uint32_t>(comps));
      int j = static_cast<int>(k) - 1;
      while (j >= 0 && ++pos[j] == factors_[j].size()) pos[j--] = 0;
      if (j < 0) break;
    }
  }

  std::vector<uint64_t> materialize(uint64_t cap) const;

  bool same_members(const ConceptSet& other, uint64_t cap) const {
    return materialize(cap) == other.materialize(cap);
  }

 private:
  void require_within(uint64_t cap) const {
    if (cardinality() > cap)
      throw CapExceeded("concept set of size " + std::to_string(cardinality()) +
                        " exceeds enumeration cap " + std::to_string(cap));
  }

  Kind kind_ = Kind::Explicit;
  ConceptSpace space_;
  std::vector<uint64_t> members_;                // Explicit: sorted indices
  std::vector<std::vector<uint32_t>> factors_;   // Product: sorted values
};

}  // namespace coco
