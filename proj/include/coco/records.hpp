#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coco/space.hpp"

namespace coco {

// One example as probability summaries: per-concept predicted distributions,
// optional predicted label distribution, optional ground-truth concepts, and
// the ground-truth label.
struct ExampleRecord {
  std::string id;
  std::vector<std::vector<double>> concept_probs;
  std::optional<std::vector<double>> label_probs;
  std::optional<std::vector<uint32_t>> c_star;
  uint32_t y_star = 0;

  FactorizedConceptDistribution concept_distribution() const {
    return FactorizedConceptDistribution{concept_probs};
  }
};

// Line-delimited records, one JSON object per line with fixed field order
// (id, concept_probs, label_probs, c_star, y_star) for canonical hashing.
void write_records(std::ostream& out, std::span<const ExampleRecord> records);
void write_records(const std::filesystem::path& path,
                   std::span<const ExampleRecord> records);

std::vector<ExampleRecord> read_records(std::istream& in);
std::vector<ExampleRecord> read_records(const std::filesystem::path& path);

}  // namespace coco
