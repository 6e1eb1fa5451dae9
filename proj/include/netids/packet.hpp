#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "netids/common.hpp"

namespace netids {

// The 29 exported header fields of one IP packet, in canonical column order.
inline constexpr std::array<std::string_view, 29> kPacketColumns = {
    "frame.time_epoch",
    "frame.len",
    "ip.proto",
    "ip.src",
    "ip.dst",
    "ipv6.src",
    "ipv6.dst",
    "ip.ttl",
    "ip.id",
    "ip.hdr_len",
    "ip.len",
    "ip.flags.df",
    "tcp.srcport",
    "tcp.dstport",
    "tcp.stream",
    "tcp.time_delta",
    "tcp.time_relative",
    "tcp.analysis.initial_rtt",
    "tcp.flags",
    "tcp.window_size_value",
    "tcp.hdr_len",
    "tcp.len",
    "udp.srcport",
    "udp.dstport",
    "udp.stream",
    "udp.length",
    "http.response.code",
    "http.request.method",
    "http.content_length",
};

// One extracted IP packet. String-typed IP fields may hold a comma-joined
// "outer,inner" pair when the packet is an ICMP error quoting the datagram
// that triggered it.
struct PacketRecord {
  double frame_time_epoch = 0;
  uint32_t frame_len = 0;
  std::string ip_proto;
  std::string ip_src, ip_dst;
  std::string ipv6_src, ipv6_dst;
  std::string ip_ttl, ip_id, ip_hdr_len, ip_len;
  std::optional<int> ip_flags_df;

  std::optional<uint16_t> tcp_srcport, tcp_dstport;
  std::optional<uint32_t> tcp_stream;
  std::optional<double> tcp_time_delta, tcp_time_relative, tcp_analysis_initial_rtt;
  std::optional<uint16_t> tcp_flags;
  std::optional<uint32_t> tcp_window_size_value;
  std::optional<uint32_t> tcp_hdr_len, tcp_len;

  std::optional<uint16_t> udp_srcport, udp_dstport;
  std::optional<uint32_t> udp_stream;
  std::optional<uint32_t> udp_length;

  std::optional<int> http_response_code;
  std::optional<std::string> http_request_method;
  std::optional<int64_t> http_content_length;

  // Provenance; not part of the 29 exported columns.
  std::string source;
};

namespace detail {

inline std::string opt_str(const std::optional<int>& v) {
  return v ? std::to_string(*v) : std::string();
}
inline std::string opt_str(const std::optional<int64_t>& v) {
  return v ? std::to_string(*v) : std::string();
}
inline std::string opt_str(const std::optional<uint16_t>& v) {
  return v ? std::to_string(*v) : std::string();
}
inline std::string opt_str(const std::optional<uint32_t>& v) {
  return v ? std::to_string(*v) : std::string();
}
inline std::string opt_str(const std::optional<double>& v) {
  return v ? format_double(*v) : std::string();
}
inline std::string opt_str(const std::optional<std::string>& v) { return v ? *v : std::string(); }

template <class T>
std::optional<T> opt_num(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  auto v = parse_int(cell);
  if (!v) throw SchemaMismatch("bad numeric cell '" + cell + "'");
  return T(*v);
}

inline std::optional<double> opt_dbl(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  auto v = parse_double(cell);
  if (!v) throw SchemaMismatch("bad floating cell '" + cell + "'");
  return v;
}

}  // namespace detail

inline std::vector<std::string> packet_to_row(const PacketRecord& r) {
  using namespace detail;
  return {
      format_double(r.frame_time_epoch),
      std::to_string(r.frame_len),
      r.ip_proto,
      r.ip_src,
      r.ip_dst,
      r.ipv6_src,
      r.ipv6_dst,
      r.ip_ttl,
      r.ip_id,
      r.ip_hdr_len,
      r.ip_len,
      opt_str(r.ip_flags_df),
      opt_str(r.tcp_srcport),
      opt_str(r.tcp_dstport),
      opt_str(r.tcp_stream),
      opt_str(r.tcp_time_delta),
      opt_str(r.tcp_time_relative),
      opt_str(r.tcp_analysis_initial_rtt),
      opt_str(r.tcp_flags),
      opt_str(r.tcp_window_size_value),
      opt_str(r.tcp_hdr_len),
      opt_str(r.tcp_len),
      opt_str(r.udp_srcport),
      opt_str(r.udp_dstport),
      opt_str(r.udp_stream),
      opt_str(r.udp_length),
      opt_str(r.http_response_code),
      opt_str(r.http_request_method),
      opt_str(r.http_content_length),
  };
}

inline PacketRecord packet_from_row(const std::vector<std::string>& row) {
  using namespace detail;
  if (row.size() != kPacketColumns.size())
    throw SchemaMismatch("expected " + std::to_string(kPacketColumns.size()) + " cells, got " +
                         std::to_string(row.size()));
  PacketRecord r;
  auto t = parse_double(row[0]);
  if (!t) throw SchemaMismatch("bad frame.time_epoch '" + row[0] + "'");
  r.frame_time_epoch = *t;
  auto len = parse_int(row[1]);
  if (!len) throw SchemaMismatch("bad frame.len '" + row[1] + "'");
  r.frame_len = uint32_t(*len);
  r.ip_proto = row[2];
  r.ip_src = row[3];
  r.ip_dst = row[4];
  r.ipv6_src = row[5];
  r.ipv6_dst = row[6];
  r.ip_ttl = row[7];
  r.ip_id = row[8];
  r.ip_hdr_len = row[9];
  r.ip_len = row[10];
  r.ip_flags_df = opt_num<int>(row[11]);
  r.tcp_srcport = opt_num<uint16_t>(row[12]);
  r.tcp_dstport = opt_num<uint16_t>(row[13]);
  r.tcp_stream = opt_num<uint32_t>(row[14]);
  r.tcp_time_delta = opt_dbl(row[15]);
  r.tcp_time_relative = opt_dbl(row[16]);
  r.tcp_analysis_initial_rtt = opt_dbl(row[17]);
  r.tcp_flags = opt_num<uint16_t>(row[18]);
  r.tcp_window_size_value = opt_num<uint32_t>(row[19]);
  r.tcp_hdr_len = opt_num<uint32_t>(row[20]);
  r.tcp_len = opt_num<uint32_t>(row[21]);
  r.udp_srcport = opt_num<uint16_t>(row[22]);
  r.udp_dstport = opt_num<uint16_t>(row[23]);
  r.udp_stream = opt_num<uint32_t>(row[24]);
  r.udp_length = opt_num<uint32_t>(row[25]);
  r.http_response_code = opt_num<int>(row[26]);
  r.http_request_method = row[27].empty() ? std::nullopt : std::optional<std::string>(row[27]);
  r.http_content_length = opt_num<int64_t>(row[28]);
  return r;
}

// Equality over the 29 exported fields; provenance is ignored.
inline bool same_fields(const PacketRecord& a, const PacketRecord& b) {
  return packet_to_row(a) == packet_to_row(b);
}

}  // namespace netids
