#pragma once

#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "netids/capture.hpp"
#include "netids/csv.hpp"
#include "netids/packet.hpp"
#include "netids/rng.hpp"
#include "netids/types.hpp"

namespace netids {

struct LabelRule {
  Subcategory subcategory = Subcategory::normal;
  std::set<std::string> attacker_ips;
  std::optional<double> start, end;  // epoch seconds, inclusive

  Category category() const { return category_of(subcategory); }

  bool matches(const PacketRecord& rec) const {
    if (attacker_ips.empty()) return false;
    const std::string& src = rec.ip_src.empty() ? rec.ipv6_src : rec.ip_src;
    const std::string& dst = rec.ip_dst.empty() ? rec.ipv6_dst : rec.ip_dst;
    if (!attacker_ips.count(src) && !attacker_ips.count(dst)) return false;
    double t = rec.frame_time_epoch;
    if (start && t < *start) return false;
    if (end && t > *end) return false;
    return true;
  }
};

struct LabeledTable {
  std::vector<PacketRecord> records;
  std::vector<Subcategory> subcategory;
  std::vector<Category> category;
  std::vector<int> binary;

  size_t size() const { return records.size(); }

  void push(PacketRecord rec, Subcategory sub) {
    records.push_back(std::move(rec));
    subcategory.push_back(sub);
    category.push_back(category_of(sub));
    binary.push_back(category_of(sub) == Category::normal ? 0 : 1);
  }
};

// First matching rule wins; a record no rule claims is normal traffic.
inline LabeledTable label_records(std::vector<PacketRecord> records,
                                  const std::vector<LabelRule>& rules) {
  LabeledTable table;
  table.records.reserve(records.size());
  for (auto& rec : records) {
    Subcategory sub = Subcategory::normal;
    for (const auto& rule : rules) {
      if (rule.matches(rec)) {
        sub = rule.subcategory;
        break;
      }
    }
    table.push(std::move(rec), sub);
  }
  return table;
}

// Oversized attack subcategories are thinned per-row at rate cap/N, so kept
// counts fluctuate binomially around the cap; smaller ones pass through
// whole. Normal traffic is thinned at its own fraction.
inline LabeledTable subsample_stratified(const LabeledTable& table, size_t cap,
                                         double normal_fraction, uint64_t seed,
                                         std::vector<std::string>* warnings = nullptr) {
  if (cap == 0) throw DataError("subsample cap must be positive");
  if (!(normal_fraction > 0.0) || normal_fraction > 1.0)
    throw DataError("normal fraction must be in (0, 1]");
  std::array<size_t, kSubcategoryCount> counts{};
  for (auto sub : table.subcategory) counts[size_t(sub)]++;
  std::array<double, kSubcategoryCount> keep{};
  for (size_t s = 0; s < kSubcategoryCount; ++s) {
    if (Subcategory(s) == Subcategory::normal)
      keep[s] = normal_fraction;
    else
      keep[s] = counts[s] <= cap ? 1.0 : double(cap) / double(counts[s]);
    if (warnings && counts[s] == 0)
      warnings->push_back(std::string("subcategory ") + std::string(kSubcategoryNames[s]) +
                          " has zero rows");
  }
  Rng rng(seed);
  LabeledTable out;
  for (size_t i = 0; i < table.size(); ++i) {
    double p = keep[size_t(table.subcategory[i])];
    if (p >= 1.0 || rng.uniform01() < p) out.push(table.records[i], table.subcategory[i]);
  }
  return out;
}

// Rules file: one JSON object per line with subcategory, ips, start, end.
inline void write_rules(const std::string& path, const std::vector<LabelRule>& rules) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& rule : rules) {
    nlohmann::json j;
    j["subcategory"] = std::string(kSubcategoryNames[size_t(rule.subcategory)]);
    j["ips"] = rule.attacker_ips;
    if (rule.start) j["start"] = *rule.start;
    if (rule.end) j["end"] = *rule.end;
    out << j.dump() << '\n';
  }
  if (!out) throw IoError("short write to " + path);
}

inline std::vector<LabelRule> read_rules(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::vector<LabelRule> rules;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaMismatch(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
    LabelRule rule;
    auto sub = subcategory_from_name(j.value("subcategory", std::string()));
    if (!sub)
      throw SchemaMismatch(path + ":" + std::to_string(lineno) + ": unknown subcategory");
    rule.subcategory = *sub;
    if (j.contains("ips"))
      for (const auto& ip : j["ips"]) rule.attacker_ips.insert(ip.get<std::string>());
    if (j.contains("start") && !j["start"].is_null()) rule.start = j["start"].get<double>();
    if (j.contains("end") && !j["end"].is_null()) rule.end = j["end"].get<double>();
    rules.push_back(std::move(rule));
  }
  return rules;
}

inline const std::vector<std::string>& labeled_csv_header() {
  static const std::vector<std::string> header = [] {
    std::vector<std::string> h(kPacketColumns.begin(), kPacketColumns.end());
    h.push_back("label_category");
    h.push_back("label_subcategory");
    h.push_back("binary_label");
    return h;
  }();
  return header;
}

inline size_t export_labeled(const LabeledTable& table, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  csv_write_row(out, labeled_csv_header());
  for (size_t i = 0; i < table.size(); ++i) {
    auto row = packet_to_row(table.records[i]);
    row.push_back(std::string(kCategoryNames[size_t(table.category[i])]));
    row.push_back(std::string(kSubcategoryNames[size_t(table.subcategory[i])]));
    row.push_back(std::to_string(table.binary[i]));
    csv_write_row(out, row);
  }
  if (!out) throw IoError("short write to " + path);
  return table.size();
}

inline LabeledTable import_labeled(const std::string& path) {
  auto rows = csv_read_file(path);
  if (rows.empty()) throw SchemaMismatch("empty labeled CSV " + path);
  if (rows[0] != labeled_csv_header())
    throw SchemaMismatch("labeled CSV header mismatch in " + path);
  LabeledTable table;
  for (size_t i = 1; i < rows.size(); ++i) {
    auto& row = rows[i];
    if (row.size() != labeled_csv_header().size())
      throw SchemaMismatch(path + ": wrong cell count in row " + std::to_string(i));
    std::vector<std::string> packet_cells(row.begin(), row.begin() + kPacketColumns.size());
    PacketRecord rec = packet_from_row(packet_cells);
    rec.source = path;
    auto sub = subcategory_from_name(row[kPacketColumns.size() + 1]);
    if (!sub) throw SchemaMismatch(path + ": unknown subcategory in row " + std::to_string(i));
    table.push(std::move(rec), *sub);
  }
  return table;
}

}  // namespace netids
