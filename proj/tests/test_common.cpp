#include <catch2/catch_amalgamated.hpp>

#include "netids/common.hpp"
#include "netids/csv.hpp"
#include "netids/rng.hpp"
#include "support.hpp"

using namespace netids;

TEST_CASE("crc32 matches the standard check value", "[common]") {
  CHECK(crc32("123456789") == 0xCBF43926u);
  CHECK(crc32("") == 0u);
  std::string chunkwise_a = "1234";
  std::string chunkwise_b = "56789";
  uint32_t partial = crc32(chunkwise_a.data(), chunkwise_a.size());
  CHECK(crc32(chunkwise_b.data(), chunkwise_b.size(), partial) == 0xCBF43926u);
}

TEST_CASE("little endian packing round trips", "[common]") {
  std::string s;
  put_u32le(s, 0xDEADBEEFu);
  put_u64le(s, 0x0123456789ABCDEFull);
  REQUIRE(s.size() == 12);
  const auto* p = reinterpret_cast<const unsigned char*>(s.data());
  CHECK(get_u32le(p) == 0xDEADBEEFu);
  CHECK(get_u64le(p + 4) == 0x0123456789ABCDEFull);
  CHECK(get_u16le(p) == 0xBEEFu);
  const unsigned char be[] = {0x12, 0x34, 0x56, 0x78};
  CHECK(get_u32be(be) == 0x12345678u);
  CHECK(get_u16be(be) == 0x1234u);
}

TEST_CASE("format_double is shortest and parses back exactly", "[common]") {
  for (double v : {0.1, 1.0, -2.5, 1e-12, 123456789.0, 0.0, 1626000000.123456}) {
    auto s = format_double(v);
    auto back = parse_double(s);
    REQUIRE(back.has_value());
    CHECK(*back == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK_FALSE(parse_double("1.5x").has_value());
  CHECK_FALSE(parse_double("").has_value());
  CHECK(parse_int("42").value() == 42);
  CHECK_FALSE(parse_int("42.5").has_value());
  CHECK_FALSE(parse_int("").has_value());
}

TEST_CASE("read and write files round trip binary data", "[common]") {
  testsupport::TempDir dir("common");
  std::string payload = std::string("abc\0\xff\r\n", 7);
  write_file(dir.file("blob.bin"), payload);
  CHECK(read_file(dir.file("blob.bin")) == payload);
  CHECK_THROWS_AS(read_file(dir.file("missing.bin")), IoError);
}

TEST_CASE("split keeps empty fields", "[common]") {
  auto parts = split("a,,b,", ',');
  REQUIRE(parts.size() == 4);
  CHECK(parts[0] == "a");
  CHECK(parts[1].empty());
  CHECK(parts[2] == "b");
  CHECK(parts[3].empty());
  CHECK(split("", ',').size() == 1);
}

TEST_CASE("rng is deterministic and unbiased at the edges", "[common]") {
  Rng a(7), b(7);
  for (int i = 0; i < 100; ++i) CHECK(a.uniform01() == b.uniform01());
  Rng r(1);
  for (int i = 0; i < 1000; ++i) {
    double u = r.uniform01();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    uint64_t k = r.below(7);
    CHECK(k < 7);
    uint32_t v = r.range_u32(3, 5);
    CHECK(v >= 3);
    CHECK(v <= 5);
  }
  CHECK(r.below(1) == 0);
  std::vector<int> v1{1, 2, 3, 4, 5}, v2{1, 2, 3, 4, 5};
  Rng s1(3), s2(3);
  s1.shuffle(v1);
  s2.shuffle(v2);
  CHECK(v1 == v2);
}

TEST_CASE("csv quoting and parsing follow the quoting rules", "[common]") {
  CHECK(csv_quote("plain") == "plain");
  CHECK(csv_quote("a,b") == "\"a,b\"");
  CHECK(csv_quote("say \"hi\"") == "\"say \"\"hi\"\"\"");
  std::string text = "a,b,c\r\n\"x,y\",\"q\"\"q\",\r\n";
  auto rows = csv_parse(text);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"a", "b", "c"});
  CHECK(rows[1] == std::vector<std::string>{"x,y", "q\"q", ""});
  testsupport::TempDir dir("csv");
  std::ostringstream out;
  csv_write_row(out, {"1", "with,comma", "with\nnewline"});
  write_file(dir.file("t.csv"), out.str());
  auto back = csv_read_file(dir.file("t.csv"));
  REQUIRE(back.size() == 1);
  CHECK(back[0][1] == "with,comma");
  CHECK(back[0][2] == "with\nnewline");
}
