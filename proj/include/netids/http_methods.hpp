#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <string_view>
#include <vector>

namespace netids {

// Request methods from the HTTP, WebDAV, RTSP, SIP, ICAP, SSDP and assorted
// vendor registries, 92 in total. The shipped dictionary prepends "0" (the
// missing-value token) and sorts the rest, so indices are stable across
// builds: 0 = "0", 1..92 = methods in ascending order. Unknown tokens fold
// to index 0.
namespace detail {
inline constexpr std::array<std::string_view, 92> kRawMethods = {
    "ACL", "BASELINE-CONTROL", "BIND", "CHECKIN", "CHECKOUT", "CONNECT", "COPY", "DELETE",
    "GET", "HEAD", "LABEL", "LINK", "LOCK", "MERGE", "MKACTIVITY", "MKCALENDAR",
    "MKCOL", "MKREDIRECTREF", "MKWORKSPACE", "MOVE", "OPTIONS", "ORDERPATCH", "PATCH", "POST",
    "PRI", "PROPFIND", "PROPPATCH", "PUT", "REBIND", "REPORT", "SEARCH", "TRACE",
    "UNBIND", "UNCHECKOUT", "UNLINK", "UNLOCK", "UPDATE", "UPDATEREDIRECTREF", "VERSION-CONTROL",
    "ANNOUNCE", "DESCRIBE", "GET_PARAMETER", "PAUSE", "PLAY", "PLAY_NOTIFY", "RECORD",
    "REDIRECT", "SETUP", "SET_PARAMETER", "TEARDOWN",
    "ACK", "BYE", "CANCEL", "INFO", "INVITE", "MESSAGE", "NOTIFY", "PRACK",
    "PUBLISH", "REFER", "REGISTER", "SUBSCRIBE",
    "BCOPY", "BDELETE", "BMOVE", "BPROPFIND", "BPROPPATCH", "POLL", "SUBSCRIPTIONS",
    "UNSUBSCRIBE", "X-MS-ENUMATTS",
    "REQMOD", "RESPMOD",
    "M-POST", "M-SEARCH",
    "BAN", "BITS_POST", "BREW", "CCM_POST", "DEBUG", "PURGE", "QUERY", "RPC_CONNECT",
    "RPC_IN_DATA", "RPC_OUT_DATA", "SHOWMETHOD", "SMS_POST", "SOURCE", "SPACEJUMP",
    "SSTP_DUPLEX_POST", "TEXTSEARCH", "TRACK",
};
}  // namespace detail

inline const std::vector<std::string>& http_method_dictionary() {
  static const std::vector<std::string> dict = [] {
    std::vector<std::string> d;
    d.reserve(detail::kRawMethods.size() + 1);
    d.emplace_back("0");
    for (auto m : detail::kRawMethods) d.emplace_back(m);
    std::sort(d.begin() + 1, d.end());
    return d;
  }();
  return dict;
}

inline constexpr size_t kMethodVocabSize = detail::kRawMethods.size() + 1;  // 93

inline uint32_t http_method_index(std::string_view token) {
  const auto& dict = http_method_dictionary();
  auto it = std::lower_bound(dict.begin() + 1, dict.end(), token);
  if (it != dict.end() && *it == token) return uint32_t(it - dict.begin());
  return 0;
}

}  // namespace netids
