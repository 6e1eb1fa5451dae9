#pragma once

#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace netids {

// Error hierarchy. DataError maps to CLI exit code 3, NumericError to 4.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : Error {
  using Error::Error;
};

struct NumericError : Error {
  using Error::Error;
};

struct IoError : DataError {
  using DataError::DataError;
};
struct BadMagic : DataError {
  using DataError::DataError;
};
struct UnsupportedLinkType : DataError {
  using DataError::DataError;
};
struct SchemaMismatch : DataError {
  using DataError::DataError;
};
struct ChecksumMismatch : DataError {
  using DataError::DataError;
};
struct ArchMismatch : DataError {
  using DataError::DataError;
};
struct TooFewRows : DataError {
  using DataError::DataError;
};
struct CodeOutOfRange : DataError {
  using DataError::DataError;
};
struct ZeroClass : DataError {
  using DataError::DataError;
};
struct EmptyClass : DataError {
  using DataError::DataError;
};
struct BudgetOverflow : DataError {
  using DataError::DataError;
};
struct ShapeMismatch : DataError {
  using DataError::DataError;
};
struct NonFiniteLoss : NumericError {
  using NumericError::NumericError;
};

inline uint32_t crc32(const void* data, size_t len, uint32_t seed = 0) {
  static const auto table = [] {
    std::vector<uint32_t> t(256);
    for (uint32_t i = 0; i < 256; ++i) {
      uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  uint32_t c = seed ^ 0xFFFFFFFFu;
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < len; ++i) c = table[(c ^ p[i]) & 0xFF] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

inline uint32_t crc32(std::string_view data, uint32_t seed = 0) {
  return crc32(data.data(), data.size(), seed);
}

// Little-endian scalar IO used by all binary file formats.
inline void put_u32le(std::string& out, uint32_t v) {
  char b[4] = {char(v & 0xFF), char((v >> 8) & 0xFF), char((v >> 16) & 0xFF), char((v >> 24) & 0xFF)};
  out.append(b, 4);
}

inline uint32_t get_u32le(const unsigned char* p) {
  return uint32_t(p[0]) | uint32_t(p[1]) << 8 | uint32_t(p[2]) << 16 | uint32_t(p[3]) << 24;
}

inline uint16_t get_u16le(const unsigned char* p) { return uint16_t(p[0]) | uint16_t(p[1]) << 8; }

inline void put_u64le(std::string& out, uint64_t v) {
  put_u32le(out, uint32_t(v & 0xFFFFFFFFu));
  put_u32le(out, uint32_t(v >> 32));
}

inline uint64_t get_u64le(const unsigned char* p) {
  return uint64_t(get_u32le(p)) | uint64_t(get_u32le(p + 4)) << 32;
}

inline uint32_t get_u32be(const unsigned char* p) {
  return uint32_t(p[3]) | uint32_t(p[2]) << 8 | uint32_t(p[1]) << 16 | uint32_t(p[0]) << 24;
}

inline uint16_t get_u16be(const unsigned char* p) { return uint16_t(p[1]) | uint16_t(p[0]) << 8; }

// Shortest decimal form that parses back to the identical double.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::optional<double> parse_double(std::string_view s) {
  if (s.empty()) return std::nullopt;
  double v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::optional<int64_t> parse_int(std::string_view s) {
  if (s.empty()) return std::nullopt;
  int64_t v = 0;
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return data;
}

inline void write_file(const std::string& path, std::string_view data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out.write(data.data(), std::streamsize(data.size()));
  if (!out) throw IoError("short write to " + path);
}

inline std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> parts;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) {
      parts.emplace_back(s.substr(start));
      break;
    }
    parts.emplace_back(s.substr(start, pos - start));
    start = pos + 1;
  }
  return parts;
}

}  // namespace netids
