#include "coco/records.hpp"

#include <fstream>
#include <sstream>

#include "coco/errors.hpp"
#include "json.hpp"

namespace coco {

namespace {
using ordered_json = nlohmann::ordered_json;
}

void write_records(std::ostream& out, std::span<const ExampleRecord> records) {
  for (const auto& r : records) {
    ordered_json j;
    j["id"] = r.id;
    j["concept_probs"] = r.concept_probs;
    if (r.label_probs) j["label_probs"] = *r.label_probs;
    if (r.c_star) j["c_star"] = *r.c_star;
    j["y_star"] = r.y_star;
    out << j.dump() << '\n';
  }
}

void write_records(const std::filesystem::path& path,
                   std::span<const ExampleRecord> records) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open record file for writing: " + path.string());
  write_records(out, records);
}

std::vector<ExampleRecord> read_records(std::istream& in) {
  std::vector<ExampleRecord> out;
  std::string line;
  long lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad record: ") + e.what(), lineno);
    }
    try {
      ExampleRecord r;
      r.id = j.value("id", std::string("line") + std::to_string(lineno));
      r.concept_probs = j.at("concept_probs").get<std::vector<std::vector<double>>>();
      if (j.contains("label_probs") && !j["label_probs"].is_null())
        r.label_probs = j["label_probs"].get<std::vector<double>>();
      if (j.contains("c_star") && !j["c_star"].is_null())
        r.c_star = j["c_star"].get<std::vector<uint32_t>>();
      r.y_star = j.at("y_star").get<uint32_t>();
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(std::string("bad record field: ") + e.what(), lineno);
    }
  }
  return out;
}

std::vector<ExampleRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open record file: " + path.string());
  return read_records(in);
}

}  // namespace coco
