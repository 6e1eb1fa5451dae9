#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "netids/common.hpp"

namespace netids {

inline constexpr uint32_t kPcapMagicUsec = 0xA1B2C3D4u;
inline constexpr uint32_t kPcapMagicUsecSwapped = 0xD4C3B2A1u;
inline constexpr uint32_t kPcapMagicNsec = 0xA1B23C4Du;
inline constexpr uint32_t kPcapMagicNsecSwapped = 0x4D3CB2A1u;
inline constexpr uint32_t kLinkTypeEthernet = 1;

struct PcapFrame {
  double time = 0;          // epoch seconds
  uint64_t time_frac_den = 1000000;  // 1e6 or 1e9 resolution of the source
  uint32_t orig_len = 0;    // bytes on the wire
  std::vector<unsigned char> data;  // captured bytes
};

// Classic PCAP only. Handles both byte orders and both timestamp
// resolutions; rejects anything else (PCAPNG included) as BadMagic.
class PcapReader {
 public:
  explicit PcapReader(const std::string& path) : in_(path, std::ios::binary) {
    if (!in_) throw IoError("cannot open " + path);
    unsigned char hdr[24];
    in_.read(reinterpret_cast<char*>(hdr), 24);
    if (in_.gcount() != 24) throw BadMagic("file too short for a capture header");
    uint32_t magic = get_u32le(hdr);
    switch (magic) {
      case kPcapMagicUsec:
        big_endian_ = false;
        nanosecond_ = false;
        break;
      case kPcapMagicUsecSwapped:
        big_endian_ = true;
        nanosecond_ = false;
        break;
      case kPcapMagicNsec:
        big_endian_ = false;
        nanosecond_ = true;
        break;
      case kPcapMagicNsecSwapped:
        big_endian_ = true;
        nanosecond_ = true;
        break;
      default:
        throw BadMagic("unrecognized capture magic");
    }
    uint32_t link = u32(hdr + 20);
    if (link != kLinkTypeEthernet)
      throw UnsupportedLinkType("link type " + std::to_string(link) + " not supported");
  }

  // Returns the next frame, or nullopt at end of file. A trailing record cut
  // short mid-header or mid-data sets truncated_tail() and ends iteration.
  std::optional<PcapFrame> next() {
    unsigned char rh[16];
    in_.read(reinterpret_cast<char*>(rh), 16);
    if (in_.gcount() == 0) return std::nullopt;
    if (in_.gcount() != 16) {
      truncated_tail_ = true;
      return std::nullopt;
    }
    uint32_t ts_sec = u32(rh);
    uint32_t ts_frac = u32(rh + 4);
    uint32_t incl_len = u32(rh + 8);
    uint32_t orig_len = u32(rh + 12);
    if (incl_len > 0x7FFFFFFFu) {
      truncated_tail_ = true;
      return std::nullopt;
    }
    PcapFrame f;
    f.data.resize(incl_len);
    in_.read(reinterpret_cast<char*>(f.data.data()), incl_len);
    if (uint32_t(in_.gcount()) != incl_len) {
      truncated_tail_ = true;
      return std::nullopt;
    }
    f.time_frac_den = nanosecond_ ? 1000000000u : 1000000u;
    f.time = double(ts_sec) + double(ts_frac) / double(f.time_frac_den);
    f.orig_len = orig_len;
    return f;
  }

  bool truncated_tail() const { return truncated_tail_; }
  bool nanosecond() const { return nanosecond_; }

 private:
  uint32_t u32(const unsigned char* p) const { return big_endian_ ? get_u32be(p) : get_u32le(p); }

  std::ifstream in_;
  bool big_endian_ = false;
  bool nanosecond_ = false;
  bool truncated_tail_ = false;
};

// Writes classic little-endian microsecond PCAP, Ethernet link type.
class PcapWriter {
 public:
  explicit PcapWriter(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw IoError("cannot write " + path);
    std::string hdr;
    put_u32le(hdr, kPcapMagicUsec);
    put_u32le(hdr, 0x00040002u);  // version 2.4 (major 2, minor 4)
    put_u32le(hdr, 0);            // thiszone
    put_u32le(hdr, 0);            // sigfigs
    put_u32le(hdr, 65535);        // snaplen
    put_u32le(hdr, kLinkTypeEthernet);
    out_.write(hdr.data(), std::streamsize(hdr.size()));
  }

  void write(uint64_t time_usec, const std::string& frame) {
    std::string rec;
    put_u32le(rec, uint32_t(time_usec / 1000000u));
    put_u32le(rec, uint32_t(time_usec % 1000000u));
    put_u32le(rec, uint32_t(frame.size()));
    put_u32le(rec, uint32_t(frame.size()));
    rec += frame;
    out_.write(rec.data(), std::streamsize(rec.size()));
    if (!out_) throw IoError("short capture write");
  }

 private:
  std::ofstream out_;
};

}  // namespace netids
