#include <catch2/catch_amalgamated.hpp>

#include "netids/capture.hpp"
#include "netids/labeling.hpp"
#include "netids/trafficgen.hpp"
#include "support.hpp"

using namespace netids;

namespace {

ScenarioSpec small_spec(uint64_t seed) {
  ScenarioSpec spec;
  spec.seed = seed;
  spec.duration = 600.0;
  spec.normal_budget = 400;
  spec.attack_budgets.fill(160);
  return spec;
}

std::vector<int> manifest_labels(const std::string& path, size_t expect) {
  auto lines = split(read_file(path), '\n');
  std::vector<int> labels;
  bool in_labels = false;
  for (const auto& line : lines) {
    if (line == "labels") {
      in_labels = true;
      continue;
    }
    if (!in_labels || line.empty()) continue;
    labels.push_back(int(*parse_int(line)));
  }
  REQUIRE(labels.size() == expect);
  return labels;
}

}  // namespace

TEST_CASE("generated captures parse without a single skip", "[trafficgen]") {
  testsupport::TempDir dir("gen");
  auto result = generate(small_spec(1), dir.file("out"));
  CHECK(result.packets == 400 + 10 * 160);

  auto cap = parse_capture(result.pcap_path);
  CHECK(cap.records.size() == result.packets);
  CHECK(cap.skipped_non_ip == 0);
  CHECK(cap.skipped_malformed == 0);
  CHECK(cap.skipped_truncated == 0);

  // Strictly increasing timestamps across the file.
  for (size_t i = 1; i < cap.records.size(); ++i)
    CHECK(cap.records[i].frame_time_epoch > cap.records[i - 1].frame_time_epoch);

  // The manifest counts add up to the packet total.
  size_t sum = 0;
  for (size_t s = 0; s < kSubcategoryCount; ++s) sum += result.counts[s];
  CHECK(sum == result.packets);
  CHECK(result.counts[size_t(Subcategory::normal)] == 400);
  CHECK(result.counts[size_t(Subcategory::ddos_http)] == 160);
}

TEST_CASE("rule labeling reproduces the manifest label stream", "[trafficgen]") {
  for (uint64_t seed : {1ull, 2ull}) {
    testsupport::TempDir dir("lbl");
    auto result = generate(small_spec(seed), dir.file("out"));
    auto cap = parse_capture(result.pcap_path);
    auto rules = read_rules(result.rules_path);
    auto table = label_records(std::move(cap.records), rules);
    auto expect = manifest_labels(result.manifest_path, result.packets);
    REQUIRE(table.size() == expect.size());
    size_t mismatches = 0;
    for (size_t i = 0; i < expect.size(); ++i)
      mismatches += int(table.subcategory[i]) != expect[i];
    CHECK(mismatches == 0);
  }
}

TEST_CASE("generated packets carry real internet checksums", "[trafficgen]") {
  testsupport::TempDir dir("ck");
  ScenarioSpec spec = small_spec(3);
  spec.normal_budget = 40;
  spec.attack_budgets.fill(20);
  auto result = generate(spec, dir.file("out"));

  PcapReader reader(result.pcap_path);
  size_t checked_ip = 0, checked_tcp = 0, checked_udp = 0, checked_icmp = 0;
  while (auto frame = reader.next()) {
    const auto& d = frame->data;
    REQUIRE(d.size() >= 34);
    REQUIRE(get_u16be(d.data() + 12) == 0x0800);
    const unsigned char* ip = d.data() + 14;
    size_t ihl = size_t(ip[0] & 0x0F) * 4;
    // The IP header checksum must verify to zero when summed over itself.
    CHECK(gen::inet_checksum(ip, ihl) == 0);
    ++checked_ip;
    size_t ip_total = get_u16be(ip + 2);
    REQUIRE(14 + ip_total <= d.size());
    const unsigned char* seg = ip + ihl;
    size_t seg_len = ip_total - ihl;
    uint32_t src = get_u32be(ip + 12), dst = get_u32be(ip + 16);
    uint8_t proto = ip[9];
    uint32_t pseudo = gen::FrameBuilder::pseudo_sum(src, dst, proto, seg_len);
    if (proto == 6) {
      CHECK(gen::inet_checksum(seg, seg_len, pseudo) == 0);
      ++checked_tcp;
    } else if (proto == 17) {
      CHECK(gen::inet_checksum(seg, seg_len, pseudo) == 0);
      ++checked_udp;
    } else if (proto == 1) {
      CHECK(gen::inet_checksum(seg, seg_len) == 0);
      ++checked_icmp;
    }
  }
  CHECK(checked_ip == result.packets);
  CHECK(checked_tcp > 0);
  CHECK(checked_udp > 0);
  CHECK(checked_icmp > 0);
}

TEST_CASE("scenario validation rejects impossible budgets", "[trafficgen]") {
  ScenarioSpec spec;
  spec.duration = 20.0;  // far too short for ten attack windows
  CHECK_THROWS_AS(TrafficGenerator(spec).generate("/tmp/never-used"), DataError);

  ScenarioSpec huge = small_spec(1);
  huge.attack_budgets[0] = 40'000'000;  // exceeds the window's microsecond capacity
  CHECK_THROWS_AS(TrafficGenerator(huge).generate("/tmp/never-used"), BudgetOverflow);
}

TEST_CASE("attack traffic stays inside its rule window", "[trafficgen]") {
  testsupport::TempDir dir("win");
  auto result = generate(small_spec(5), dir.file("out"));
  auto cap = parse_capture(result.pcap_path);
  auto rules = read_rules(result.rules_path);
  auto expect = manifest_labels(result.manifest_path, result.packets);
  REQUIRE(rules.size() == 10);
  for (size_t i = 0; i < cap.records.size(); ++i) {
    int code = expect[i];
    if (code == int(Subcategory::normal)) continue;
    const LabelRule* rule = nullptr;
    for (const auto& r : rules)
      if (int(r.subcategory) == code) rule = &r;
    REQUIRE(rule != nullptr);
    CHECK(cap.records[i].frame_time_epoch >= *rule->start);
    CHECK(cap.records[i].frame_time_epoch <= *rule->end);
  }
}
