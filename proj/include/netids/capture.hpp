#pragma once

#include <arpa/inet.h>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "netids/csv.hpp"
#include "netids/packet.hpp"
#include "netids/pcap.hpp"

namespace netids {

inline constexpr uint16_t kTcpFlagFin = 0x001;
inline constexpr uint16_t kTcpFlagSyn = 0x002;
inline constexpr uint16_t kTcpFlagRst = 0x004;
inline constexpr uint16_t kTcpFlagPsh = 0x008;
inline constexpr uint16_t kTcpFlagAck = 0x010;
inline constexpr uint16_t kTcpFlagUrg = 0x020;

// Direction-insensitive conversation key: endpoints are stored in canonical
// order so key(a->b) == key(b->a).
struct StreamKey {
  uint8_t proto = 0;  // 6 or 17
  std::string addr_lo, addr_hi;
  uint16_t port_lo = 0, port_hi = 0;

  friend bool operator<(const StreamKey& a, const StreamKey& b) {
    return std::tie(a.proto, a.addr_lo, a.port_lo, a.addr_hi, a.port_hi) <
           std::tie(b.proto, b.addr_lo, b.port_lo, b.addr_hi, b.port_hi);
  }
  friend bool operator==(const StreamKey& a, const StreamKey& b) {
    return std::tie(a.proto, a.addr_lo, a.port_lo, a.addr_hi, a.port_hi) ==
           std::tie(b.proto, b.addr_lo, b.port_lo, b.addr_hi, b.port_hi);
  }
};

inline StreamKey make_stream_key(uint8_t proto, const std::string& src_addr, uint16_t src_port,
                                 const std::string& dst_addr, uint16_t dst_port) {
  StreamKey k;
  k.proto = proto;
  if (std::tie(src_addr, src_port) <= std::tie(dst_addr, dst_port)) {
    k.addr_lo = src_addr;
    k.port_lo = src_port;
    k.addr_hi = dst_addr;
    k.port_hi = dst_port;
  } else {
    k.addr_lo = dst_addr;
    k.port_lo = dst_port;
    k.addr_hi = src_addr;
    k.port_hi = src_port;
  }
  return k;
}

// First-seen-order stream indices, counted separately for TCP and UDP.
class StreamRegistry {
 public:
  uint32_t assign(const StreamKey& key) {
    auto [it, inserted] = ids_.try_emplace(key, 0);
    if (inserted) {
      uint32_t& next = key.proto == 6 ? next_tcp_ : next_udp_;
      it->second = next++;
    }
    return it->second;
  }

  size_t tcp_count() const { return next_tcp_; }
  size_t udp_count() const { return next_udp_; }

 private:
  std::map<StreamKey, uint32_t> ids_;
  uint32_t next_tcp_ = 0;
  uint32_t next_udp_ = 0;
};

struct CaptureOptions {
  std::string source;  // provenance label; defaults to the file path
};

struct CaptureResult {
  std::vector<PacketRecord> records;
  uint64_t skipped_non_ip = 0;      // ARP and other non-IP ethertypes
  uint64_t skipped_malformed = 0;   // frames too short for their own headers
  uint64_t skipped_truncated = 0;   // trailing record cut off mid-file
  size_t tcp_streams = 0;
  size_t udp_streams = 0;
};

namespace detail {

struct TcpStreamState {
  bool has_first = false;
  double first_time = 0;
  double last_time = 0;
  std::optional<double> syn_time;
  std::optional<double> synack_time;
  std::string initiator;  // "addr:port" of the SYN sender
  std::optional<double> initial_rtt;
};

inline std::string ipv4_text(const unsigned char* p) {
  char buf[INET_ADDRSTRLEN];
  ::inet_ntop(AF_INET, p, buf, sizeof(buf));
  return buf;
}

inline std::string ipv6_text(const unsigned char* p) {
  char buf[INET6_ADDRSTRLEN];
  ::inet_ntop(AF_INET6, p, buf, sizeof(buf));
  return buf;
}

inline bool is_method_token(std::string_view tok) {
  if (tok.empty() || tok.size() > 24) return false;
  for (char c : tok)
    if (!((c >= 'A' && c <= 'Z') || c == '-' || c == '_')) return false;
  return true;
}

// "GET /path HTTP/1.1" -> "GET"
inline std::optional<std::string> parse_request_line(std::string_view line) {
  size_t sp1 = line.find(' ');
  if (sp1 == std::string_view::npos) return std::nullopt;
  size_t sp2 = line.find(' ', sp1 + 1);
  if (sp2 == std::string_view::npos) return std::nullopt;
  std::string_view method = line.substr(0, sp1);
  std::string_view version = line.substr(sp2 + 1);
  if (!is_method_token(method)) return std::nullopt;
  if (version.rfind("HTTP/", 0) != 0) return std::nullopt;
  return std::string(method);
}

// "HTTP/1.1 200 OK" -> 200
inline std::optional<int> parse_status_line(std::string_view line) {
  if (line.rfind("HTTP/1.", 0) != 0) return std::nullopt;
  size_t sp = line.find(' ');
  if (sp == std::string_view::npos) return std::nullopt;
  std::string_view rest = line.substr(sp + 1);
  size_t end = rest.find(' ');
  auto code = parse_int(rest.substr(0, end == std::string_view::npos ? rest.size() : end));
  if (!code || *code < 100 || *code > 599) return std::nullopt;
  return int(*code);
}

inline bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (std::tolower((unsigned char)a[i]) != std::tolower((unsigned char)b[i])) return false;
  return true;
}

// Request-line / status-line sniffing over a TCP payload that begins a
// message. Pipelined requests in the same segment comma-join their methods.
inline void sniff_http(std::string_view payload, PacketRecord& rec) {
  if (payload.empty()) return;
  bool starts_response = payload.rfind("HTTP/1.", 0) == 0;
  bool starts_request = false;
  if (!starts_response) {
    size_t sp = payload.find(' ');
    if (sp != std::string_view::npos && sp > 0 && is_method_token(payload.substr(0, sp)))
      starts_request = parse_request_line(payload.substr(0, payload.find("\r\n"))).has_value();
  }
  if (!starts_response && !starts_request) return;

  std::string methods;
  int lines_scanned = 0;
  size_t pos = 0;
  while (pos < payload.size() && lines_scanned < 200) {
    size_t eol = payload.find("\r\n", pos);
    std::string_view line = payload.substr(pos, eol == std::string_view::npos ? std::string_view::npos
                                                                              : eol - pos);
    if (auto m = parse_request_line(line)) {
      if (!methods.empty()) methods += ',';
      methods += *m;
    } else if (auto code = parse_status_line(line)) {
      if (!rec.http_response_code) rec.http_response_code = *code;
    } else {
      size_t colon = line.find(':');
      if (colon != std::string_view::npos && iequals(line.substr(0, colon), "Content-Length")) {
        std::string_view v = line.substr(colon + 1);
        while (!v.empty() && v.front() == ' ') v.remove_prefix(1);
        if (auto n = parse_int(v); n && !rec.http_content_length) rec.http_content_length = *n;
      }
    }
    ++lines_scanned;
    if (eol == std::string_view::npos) break;
    pos = eol + 2;
  }
  if (!methods.empty()) rec.http_request_method = methods;
}

}  // namespace detail

// Streaming parser for one capture file. Stream indices, per-stream timing
// and handshake RTT are tracked across the whole file, so parsing is
// sequential by construction.
class CaptureParser {
 public:
  explicit CaptureParser(CaptureOptions opts = {}) : opts_(std::move(opts)) {}

  // Decodes one Ethernet frame into a PacketRecord. Returns nullopt for
  // non-IP frames (counted separately from malformed ones).
  std::optional<PacketRecord> decode(const PcapFrame& frame) {
    const unsigned char* p = frame.data.data();
    size_t n = frame.data.size();
    if (n < 14) {
      ++malformed_;
      return std::nullopt;
    }
    uint16_t ethertype = get_u16be(p + 12);
    size_t off = 14;
    if (ethertype == 0x8100) {  // one 802.1Q tag level
      if (n < 18) {
        ++malformed_;
        return std::nullopt;
      }
      ethertype = get_u16be(p + 16);
      off = 18;
    }
    PacketRecord rec;
    rec.frame_time_epoch = frame.time;
    rec.frame_len = frame.orig_len;
    rec.source = opts_.source;
    if (ethertype == 0x0800) {
      if (!decode_ipv4(p + off, n - off, rec)) {
        ++malformed_;
        return std::nullopt;
      }
      return rec;
    }
    if (ethertype == 0x86DD) {
      if (!decode_ipv6(p + off, n - off, rec)) {
        ++malformed_;
        return std::nullopt;
      }
      return rec;
    }
    ++non_ip_;
    return std::nullopt;
  }

  uint64_t non_ip() const { return non_ip_; }
  uint64_t malformed() const { return malformed_; }
  const StreamRegistry& registry() const { return registry_; }

 private:
  bool decode_ipv4(const unsigned char* p, size_t n, PacketRecord& rec) {
    if (n < 20 || (p[0] >> 4) != 4) return false;
    size_t ihl = size_t(p[0] & 0x0F) * 4;
    if (ihl < 20 || n < ihl) return false;
    uint16_t total_len = get_u16be(p + 2);
    if (total_len < ihl) return false;
    uint16_t id = get_u16be(p + 4);
    int df = (p[6] & 0x40) ? 1 : 0;
    uint8_t ttl = p[8];
    uint8_t proto = p[9];
    rec.ip_src = detail::ipv4_text(p + 12);
    rec.ip_dst = detail::ipv4_text(p + 16);
    rec.ip_proto = std::to_string(proto);
    rec.ip_ttl = std::to_string(ttl);
    rec.ip_id = std::to_string(id);
    rec.ip_hdr_len = std::to_string(ihl);
    rec.ip_len = std::to_string(total_len);
    rec.ip_flags_df = df;

    size_t avail = std::min(n, size_t(total_len));
    const unsigned char* tp = p + ihl;
    size_t tn = avail > ihl ? avail - ihl : 0;
    if (proto == 6) {
      decode_tcp(tp, tn, total_len - ihl, rec);
    } else if (proto == 17) {
      decode_udp(tp, tn, rec);
    } else if (proto == 1) {
      decode_icmp(tp, tn, rec);
    }
    return true;
  }

  bool decode_ipv6(const unsigned char* p, size_t n, PacketRecord& rec) {
    if (n < 40 || (p[0] >> 4) != 6) return false;
    uint16_t payload_len = get_u16be(p + 4);
    uint8_t next = p[6];
    uint8_t hops = p[7];
    rec.ipv6_src = detail::ipv6_text(p + 8);
    rec.ipv6_dst = detail::ipv6_text(p + 24);
    rec.ip_proto = std::to_string(next);
    rec.ip_ttl = std::to_string(hops);
    rec.ip_hdr_len = "40";
    rec.ip_len = std::to_string(uint32_t(payload_len) + 40);
    // ip.id and ip.flags.df have no IPv6 counterpart and stay empty.
    size_t avail = std::min(n - 40, size_t(payload_len));
    if (next == 6)
      decode_tcp(p + 40, avail, payload_len, rec);
    else if (next == 17)
      decode_udp(p + 40, avail, rec);
    return true;
  }

  void decode_tcp(const unsigned char* p, size_t n, size_t ip_payload_len, PacketRecord& rec) {
    if (n < 20) return;
    uint16_t sport = get_u16be(p);
    uint16_t dport = get_u16be(p + 2);
    size_t data_off = size_t(p[12] >> 4) * 4;
    if (data_off < 20 || data_off > ip_payload_len) return;
    uint16_t flags = uint16_t((p[12] & 0x0F) << 8) | p[13];
    uint16_t window = get_u16be(p + 14);
    rec.tcp_srcport = sport;
    rec.tcp_dstport = dport;
    rec.tcp_flags = flags;
    rec.tcp_window_size_value = window;
    rec.tcp_hdr_len = uint32_t(data_off);
    rec.tcp_len = uint32_t(ip_payload_len - data_off);

    const std::string& src = rec.ip_src.empty() ? rec.ipv6_src : rec.ip_src;
    const std::string& dst = rec.ip_dst.empty() ? rec.ipv6_dst : rec.ip_dst;
    StreamKey key = make_stream_key(6, src, sport, dst, dport);
    uint32_t stream = registry_.assign(key);
    rec.tcp_stream = stream;
    if (tcp_state_.size() <= stream) tcp_state_.resize(stream + 1);
    detail::TcpStreamState& st = tcp_state_[stream];

    double t = rec.frame_time_epoch;
    double delta = st.has_first ? std::max(0.0, t - st.last_time) : 0.0;
    double relative = st.has_first ? std::max(0.0, t - st.first_time) : 0.0;
    rec.tcp_time_delta = delta;
    rec.tcp_time_relative = relative;
    if (!st.has_first) {
      st.has_first = true;
      st.first_time = t;
    }
    st.last_time = t;

    std::string sender = src + ':' + std::to_string(sport);
    bool syn = flags & kTcpFlagSyn;
    bool ack = flags & kTcpFlagAck;
    bool rst = flags & kTcpFlagRst;
    if (syn && !ack) {
      if (!st.syn_time) {
        st.syn_time = t;
        st.initiator = sender;
      }
    } else if (syn && ack) {
      if (st.syn_time && !st.synack_time) st.synack_time = t;
    } else if (ack && !rst && !st.initial_rtt && st.syn_time && st.synack_time &&
               sender == st.initiator) {
      st.initial_rtt = t - *st.syn_time;
    }
    // Known from the handshake-completing ACK onward.
    if (st.initial_rtt) rec.tcp_analysis_initial_rtt = st.initial_rtt;

    if (n > data_off) {
      size_t payload_avail = std::min(n, ip_payload_len) - data_off;
      detail::sniff_http(
          std::string_view(reinterpret_cast<const char*>(p + data_off), payload_avail), rec);
    }
  }

  void decode_udp(const unsigned char* p, size_t n, PacketRecord& rec) {
    if (n < 8) return;
    uint16_t sport = get_u16be(p);
    uint16_t dport = get_u16be(p + 2);
    uint16_t length = get_u16be(p + 4);
    rec.udp_srcport = sport;
    rec.udp_dstport = dport;
    rec.udp_length = length;
    const std::string& src = rec.ip_src.empty() ? rec.ipv6_src : rec.ip_src;
    const std::string& dst = rec.ip_dst.empty() ? rec.ipv6_dst : rec.ip_dst;
    rec.udp_stream = registry_.assign(make_stream_key(17, src, sport, dst, dport));
  }

  // ICMP destination-unreachable (3) and time-exceeded (11) quote the
  // triggering datagram: IP fields become "outer,inner" pairs and an inner
  // UDP header contributes its ports. An incomplete inner header leaves the
  // outer values alone.
  void decode_icmp(const unsigned char* p, size_t n, PacketRecord& rec) {
    if (n < 8) return;
    uint8_t type = p[0];
    if (type != 3 && type != 11) return;
    const unsigned char* inner = p + 8;
    size_t in_n = n - 8;
    if (in_n < 20 || (inner[0] >> 4) != 4) return;
    size_t iihl = size_t(inner[0] & 0x0F) * 4;
    if (iihl < 20 || in_n < iihl) return;
    uint16_t ilen = get_u16be(inner + 2);
    uint16_t iid = get_u16be(inner + 4);
    uint8_t ittl = inner[8];
    uint8_t iproto = inner[9];
    rec.ip_proto += ',' + std::to_string(iproto);
    rec.ip_ttl += ',' + std::to_string(ittl);
    rec.ip_id += ',' + std::to_string(iid);
    rec.ip_hdr_len += ',' + std::to_string(iihl);
    rec.ip_len += ',' + std::to_string(ilen);
    if (iproto == 17 && in_n >= iihl + 4) {
      rec.udp_srcport = get_u16be(inner + iihl);
      rec.udp_dstport = get_u16be(inner + iihl + 2);
    }
  }

  CaptureOptions opts_;
  StreamRegistry registry_;
  std::vector<detail::TcpStreamState> tcp_state_;
  uint64_t non_ip_ = 0;
  uint64_t malformed_ = 0;
};

inline CaptureResult parse_capture(const std::string& path, CaptureOptions opts = {}) {
  if (opts.source.empty()) opts.source = path;
  PcapReader reader(path);
  CaptureParser parser(opts);
  CaptureResult result;
  while (auto frame = reader.next()) {
    if (auto rec = parser.decode(*frame)) result.records.push_back(std::move(*rec));
  }
  result.skipped_truncated = reader.truncated_tail() ? 1 : 0;
  result.skipped_non_ip = parser.non_ip();
  result.skipped_malformed = parser.malformed();
  result.tcp_streams = parser.registry().tcp_count();
  result.udp_streams = parser.registry().udp_count();
  return result;
}

// CSV export with the 29 canonical columns; absent fields are empty cells.
inline size_t export_records(const std::vector<PacketRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  std::vector<std::string> header(kPacketColumns.begin(), kPacketColumns.end());
  csv_write_row(out, header);
  for (const auto& rec : records) csv_write_row(out, packet_to_row(rec));
  if (!out) throw IoError("short write to " + path);
  return records.size();
}

inline std::vector<PacketRecord> import_records(const std::string& path) {
  auto rows = csv_read_file(path);
  if (rows.empty()) throw SchemaMismatch("empty capture CSV " + path);
  std::vector<std::string> expected(kPacketColumns.begin(), kPacketColumns.end());
  if (rows[0] != expected) throw SchemaMismatch("capture CSV header mismatch in " + path);
  std::vector<PacketRecord> records;
  records.reserve(rows.size() - 1);
  for (size_t i = 1; i < rows.size(); ++i) {
    records.push_back(packet_from_row(rows[i]));
    records.back().source = path;
  }
  return records;
}

}  // namespace netids
