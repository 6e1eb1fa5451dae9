#pragma once

// Shared test scaffolding: scratch directories and byte-level pcap builders.
// The builders here are written independently of the library so that capture
// tests check the parser against hand-assembled frames.

#include <unistd.h>

#include <cstdint>
#include <filesystem>
#include <string>

namespace testsupport {

struct TempDir {
  std::filesystem::path path;

  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("netids-" + tag + "-" + std::to_string(++counter) + "-" +
            std::to_string(uint64_t(::getpid())));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline void put16(std::string& s, uint16_t v, bool be = false) {
  if (be) {
    s += char(v >> 8);
    s += char(v & 0xFF);
  } else {
    s += char(v & 0xFF);
    s += char(v >> 8);
  }
}

inline void put32(std::string& s, uint32_t v, bool be = false) {
  if (be) {
    put16(s, uint16_t(v >> 16), true);
    put16(s, uint16_t(v & 0xFFFF), true);
  } else {
    put16(s, uint16_t(v & 0xFFFF), false);
    put16(s, uint16_t(v >> 16), false);
  }
}

inline std::string pcap_header(uint32_t magic = 0xA1B2C3D4u, bool be = false,
                               uint32_t linktype = 1) {
  std::string s;
  put32(s, magic, be);
  put16(s, 2, be);
  put16(s, 4, be);
  put32(s, 0, be);
  put32(s, 0, be);
  put32(s, 65535, be);
  put32(s, linktype, be);
  return s;
}

inline void pcap_record(std::string& s, uint32_t sec, uint32_t frac, const std::string& frame,
                        bool be = false, uint32_t orig_len = 0) {
  put32(s, sec, be);
  put32(s, frac, be);
  put32(s, uint32_t(frame.size()), be);
  put32(s, orig_len ? orig_len : uint32_t(frame.size()), be);
  s += frame;
}

inline std::string mac(uint8_t last) {
  std::string m(6, '\0');
  m[0] = 0x02;
  m[5] = char(last);
  return m;
}

inline std::string eth(uint8_t dst, uint8_t src, uint16_t ethertype,
                       const std::string& payload) {
  std::string f = mac(dst) + mac(src);
  put16(f, ethertype, true);
  return f + payload;
}

// IPv4 header with zero checksum; the parser never validates checksums.
inline std::string ipv4(uint32_t src, uint32_t dst, uint8_t proto, uint8_t ttl, uint16_t id,
                        bool df, const std::string& payload, uint8_t ihl_words = 5,
                        int total_len_override = -1) {
  std::string h;
  h += char(0x40 | ihl_words);
  h += char(0);
  uint16_t total = total_len_override >= 0 ? uint16_t(total_len_override)
                                           : uint16_t(ihl_words * 4 + payload.size());
  put16(h, total, true);
  put16(h, id, true);
  put16(h, df ? 0x4000 : 0x0000, true);
  h += char(ttl);
  h += char(proto);
  put16(h, 0, true);
  put32(h, src, true);
  put32(h, dst, true);
  h.resize(ihl_words * 4, '\0');
  return h + payload;
}

inline std::string ipv6(const std::string& src16, const std::string& dst16, uint8_t next,
                        uint8_t hop, const std::string& payload) {
  std::string h;
  put32(h, 0x60000000u, true);
  put16(h, uint16_t(payload.size()), true);
  h += char(next);
  h += char(hop);
  h += src16 + dst16;
  return h + payload;
}

inline std::string tcp(uint16_t sport, uint16_t dport, uint32_t seq, uint32_t ack,
                       uint16_t flags12, uint16_t window, const std::string& payload,
                       uint8_t offset_words = 5) {
  std::string t;
  put16(t, sport, true);
  put16(t, dport, true);
  put32(t, seq, true);
  put32(t, ack, true);
  t += char((offset_words << 4) | ((flags12 >> 8) & 0x0F));
  t += char(flags12 & 0xFF);
  put16(t, window, true);
  put16(t, 0, true);
  put16(t, 0, true);
  t.resize(20 + size_t(offset_words - 5) * 4, '\0');
  return t + payload;
}

inline std::string udp(uint16_t sport, uint16_t dport, const std::string& payload) {
  std::string u;
  put16(u, sport, true);
  put16(u, dport, true);
  put16(u, uint16_t(8 + payload.size()), true);
  put16(u, 0, true);
  return u + payload;
}

inline std::string icmp(uint8_t type, uint8_t code, const std::string& rest) {
  std::string c;
  c += char(type);
  c += char(code);
  put16(c, 0, true);
  return c + rest;
}

}  // namespace testsupport
