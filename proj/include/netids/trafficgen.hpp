#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "netids/common.hpp"
#include "netids/labeling.hpp"
#include "netids/pcap.hpp"
#include "netids/rng.hpp"
#include "netids/types.hpp"

namespace netids {

// Smart-home style roster on one /24: a broker, five client devices, a
// victim host, and four attacker bots.
struct ScenarioSpec {
  uint64_t seed = 1;
  double duration = 600.0;
  double start_epoch = 1626000000.0;
  size_t normal_budget = 12000;
  std::array<size_t, 10> attack_budgets{4800, 4800, 4800, 4800, 4800,
                                        4800, 4800, 4800, 4800, 4800};
};

struct GenerateResult {
  std::string pcap_path, rules_path, manifest_path;
  size_t packets = 0;
  std::array<size_t, kSubcategoryCount> counts{};
};

namespace gen {

inline constexpr uint32_t kNet = 0xC0A86400u;  // 192.168.100.0
inline constexpr uint32_t kBroker = kNet | 2;
inline constexpr std::array<uint32_t, 5> kDevices = {kNet | 3, kNet | 4, kNet | 5, kNet | 6,
                                                     kNet | 7};
inline constexpr uint32_t kVictim = kNet | 9;
inline constexpr std::array<uint32_t, 4> kBots = {kNet | 147, kNet | 148, kNet | 149, kNet | 150};

inline std::string ip_text(uint32_t ip) {
  return std::to_string(ip >> 24) + '.' + std::to_string((ip >> 16) & 0xFF) + '.' +
         std::to_string((ip >> 8) & 0xFF) + '.' + std::to_string(ip & 0xFF);
}

inline uint16_t inet_checksum(const unsigned char* data, size_t len, uint32_t seed = 0) {
  uint32_t sum = seed;
  for (size_t i = 0; i + 1 < len; i += 2) sum += uint32_t(data[i]) << 8 | data[i + 1];
  if (len & 1) sum += uint32_t(data[len - 1]) << 8;
  while (sum >> 16) sum = (sum & 0xFFFF) + (sum >> 16);
  return uint16_t(~sum & 0xFFFF);
}

struct FrameBuilder {
  // Ethernet + IPv4 with a real header checksum; payload is the transport
  // segment with its own checksum already in place.
  static std::string ipv4(uint32_t src, uint32_t dst, uint8_t proto, uint8_t ttl, uint16_t id,
                          bool df, const std::string& transport) {
    std::string f;
    f.reserve(34 + transport.size());
    auto mac = [&f](uint32_t ip) {
      const char m[6] = {0x02, 0x00, 0x00, 0x00, 0x00, char(ip & 0xFF)};
      f.append(m, 6);
    };
    mac(dst);
    mac(src);
    f += '\x08';
    f += '\x00';
    size_t ip_off = f.size();
    uint16_t total = uint16_t(20 + transport.size());
    f += char(0x45);
    f += char(0);
    f += char(total >> 8);
    f += char(total & 0xFF);
    f += char(id >> 8);
    f += char(id & 0xFF);
    f += char(df ? 0x40 : 0x00);
    f += char(0);
    f += char(ttl);
    f += char(proto);
    f += char(0);
    f += char(0);  // checksum placeholder
    for (int s = 24; s >= 0; s -= 8) f += char((src >> s) & 0xFF);
    for (int s = 24; s >= 0; s -= 8) f += char((dst >> s) & 0xFF);
    uint16_t ck = inet_checksum(reinterpret_cast<const unsigned char*>(f.data()) + ip_off, 20);
    f[ip_off + 10] = char(ck >> 8);
    f[ip_off + 11] = char(ck & 0xFF);
    f += transport;
    return f;
  }

  static uint32_t pseudo_sum(uint32_t src, uint32_t dst, uint8_t proto, size_t len) {
    uint32_t sum = 0;
    sum += src >> 16;
    sum += src & 0xFFFF;
    sum += dst >> 16;
    sum += dst & 0xFFFF;
    sum += proto;
    sum += uint32_t(len);
    return sum;
  }

  static std::string tcp(uint32_t src, uint32_t dst, uint16_t sport, uint16_t dport, uint32_t seq,
                         uint32_t ack, uint16_t flags, uint16_t window,
                         const std::string& payload) {
    std::string t;
    t.reserve(20 + payload.size());
    t += char(sport >> 8);
    t += char(sport & 0xFF);
    t += char(dport >> 8);
    t += char(dport & 0xFF);
    for (int s = 24; s >= 0; s -= 8) t += char((seq >> s) & 0xFF);
    for (int s = 24; s >= 0; s -= 8) t += char((ack >> s) & 0xFF);
    t += char(0x50 | ((flags >> 8) & 0x0F));
    t += char(flags & 0xFF);
    t += char(window >> 8);
    t += char(window & 0xFF);
    t += char(0);
    t += char(0);  // checksum placeholder
    t += char(0);
    t += char(0);
    t += payload;
    uint16_t ck = inet_checksum(reinterpret_cast<const unsigned char*>(t.data()), t.size(),
                                pseudo_sum(src, dst, 6, t.size()));
    t[16] = char(ck >> 8);
    t[17] = char(ck & 0xFF);
    return t;
  }

  static std::string udp(uint32_t src, uint32_t dst, uint16_t sport, uint16_t dport,
                         const std::string& payload) {
    std::string u;
    u.reserve(8 + payload.size());
    uint16_t len = uint16_t(8 + payload.size());
    u += char(sport >> 8);
    u += char(sport & 0xFF);
    u += char(dport >> 8);
    u += char(dport & 0xFF);
    u += char(len >> 8);
    u += char(len & 0xFF);
    u += char(0);
    u += char(0);
    u += payload;
    uint16_t ck = inet_checksum(reinterpret_cast<const unsigned char*>(u.data()), u.size(),
                                pseudo_sum(src, dst, 17, u.size()));
    if (ck == 0) ck = 0xFFFF;
    u[6] = char(ck >> 8);
    u[7] = char(ck & 0xFF);
    return u;
  }

  static std::string icmp(uint8_t type, uint8_t code, const std::string& rest) {
    std::string c;
    c += char(type);
    c += char(code);
    c += char(0);
    c += char(0);
    c += rest;
    uint16_t ck = inet_checksum(reinterpret_cast<const unsigned char*>(c.data()), c.size());
    c[2] = char(ck >> 8);
    c[3] = char(ck & 0xFF);
    return c;
  }
};

}  // namespace gen

class TrafficGenerator {
 public:
  explicit TrafficGenerator(const ScenarioSpec& spec) : spec_(spec), rng_(spec.seed) {
    for (auto& c : ip_id_) c = 0;
  }

  GenerateResult generate(const std::string& out_dir) {
    namespace fs = std::filesystem;
    plan_windows();
    size_t total = spec_.normal_budget;
    for (size_t b : spec_.attack_budgets) total += b;
    if (total > 50'000'000) throw BudgetOverflow("scenario too large: " + std::to_string(total));

    emit_normal(spec_.normal_budget);
    for (size_t s = 0; s < 10; ++s) {
      size_t budget = spec_.attack_budgets[s];
      if (budget == 0) continue;
      if (double(budget) > window_len_ * 1e6)
        throw BudgetOverflow("budget exceeds window microsecond capacity");
      auto sub = Subcategory(s);
      switch (sub) {
        case Subcategory::ddos_http:
          emit_http_flood(sub, budget, 4);
          break;
        case Subcategory::dos_http:
          emit_http_flood(sub, budget, 1);
          break;
        case Subcategory::ddos_tcp:
          emit_syn_flood(sub, budget, 4);
          break;
        case Subcategory::dos_tcp:
          emit_syn_flood(sub, budget, 1);
          break;
        case Subcategory::ddos_udp:
          emit_udp_flood(sub, budget, 4);
          break;
        case Subcategory::dos_udp:
          emit_udp_flood(sub, budget, 1);
          break;
        case Subcategory::os_fingerprint:
          emit_os_fingerprint(budget);
          break;
        case Subcategory::service_scan:
          emit_service_scan(budget);
          break;
        case Subcategory::data_exfiltration:
          emit_exfiltration(budget);
          break;
        case Subcategory::keylogging:
          emit_keylogging(budget);
          break;
        default:
          break;
      }
    }

    std::stable_sort(packets_.begin(), packets_.end(),
                     [](const Emitted& a, const Emitted& b) { return a.usec < b.usec; });
    for (size_t i = 1; i < packets_.size(); ++i)
      if (packets_[i].usec <= packets_[i - 1].usec) packets_[i].usec = packets_[i - 1].usec + 1;

    fs::create_directories(out_dir);
    GenerateResult result;
    result.pcap_path = (fs::path(out_dir) / "cap.pcap").string();
    result.rules_path = (fs::path(out_dir) / "rules.jsonl").string();
    result.manifest_path = (fs::path(out_dir) / "manifest.txt").string();

    PcapWriter writer(result.pcap_path);
    for (const auto& p : packets_) writer.write(p.usec, p.frame);

    write_rules(result.rules_path, make_rules());

    std::string manifest;
    manifest += "packets " + std::to_string(packets_.size()) + '\n';
    std::array<size_t, kSubcategoryCount> counts{};
    for (const auto& p : packets_) counts[size_t(p.label)]++;
    for (size_t s = 0; s < kSubcategoryCount; ++s)
      manifest += "count " + std::string(kSubcategoryNames[s]) + ' ' + std::to_string(counts[s]) +
                  '\n';
    manifest += "labels\n";
    for (const auto& p : packets_) manifest += std::to_string(int(p.label)) + '\n';
    write_file(result.manifest_path, manifest);

    result.packets = packets_.size();
    result.counts = counts;
    return result;
  }

  std::vector<LabelRule> make_rules() const {
    std::vector<LabelRule> rules;
    for (size_t s = 0; s < 10; ++s) {
      if (spec_.attack_budgets[s] == 0) continue;
      LabelRule rule;
      rule.subcategory = Subcategory(s);
      for (uint32_t bot : attackers(Subcategory(s))) rule.attacker_ips.insert(gen::ip_text(bot));
      rule.start = spec_.start_epoch + window_start(s) - 0.5;
      rule.end = spec_.start_epoch + window_start(s) + window_len_ + 0.5;
      rules.push_back(std::move(rule));
    }
    return rules;
  }

 private:
  struct Emitted {
    uint64_t usec;
    std::string frame;
    Subcategory label;
  };

  void plan_windows() {
    double margin = 15.0;
    double usable = spec_.duration - 2 * margin;
    if (usable <= 0) throw DataError("duration too short for attack windows");
    window_stride_ = usable / 10.0;
    window_len_ = std::min(30.0, window_stride_ - 10.0);
    bool any_attack = false;
    for (size_t b : spec_.attack_budgets) any_attack |= b > 0;
    if (any_attack && window_len_ < 1.0)
      throw DataError("duration too short: attack windows below one second");
    window_margin_ = margin;
  }

  double window_start(size_t sub) const { return window_margin_ + double(sub) * window_stride_; }

  static std::vector<uint32_t> attackers(Subcategory sub) {
    switch (sub) {
      case Subcategory::ddos_http:
      case Subcategory::ddos_tcp:
      case Subcategory::ddos_udp:
        return {gen::kBots.begin(), gen::kBots.end()};
      case Subcategory::dos_http:
      case Subcategory::dos_tcp:
      case Subcategory::dos_udp:
        return {gen::kBots[0]};
      case Subcategory::os_fingerprint:
        return {gen::kBots[1]};
      case Subcategory::service_scan:
        return {gen::kBots[2]};
      case Subcategory::data_exfiltration:
      case Subcategory::keylogging:
        return {gen::kBots[3]};
      default:
        return {};
    }
  }

  uint16_t next_ip_id(uint32_t host) {
    uint8_t oct = uint8_t(host & 0xFF);
    return ++ip_id_[oct];
  }

  void emit_tcp(double t, Subcategory label, uint32_t src, uint32_t dst, uint16_t sport,
                uint16_t dport, uint32_t seq, uint32_t ack, uint16_t flags, uint16_t window,
                uint8_t ttl, bool df, uint16_t id, const std::string& payload) {
    std::string seg = gen::FrameBuilder::tcp(src, dst, sport, dport, seq, ack, flags, window,
                                             payload);
    push(t, label, gen::FrameBuilder::ipv4(src, dst, 6, ttl, id, df, seg));
  }

  void emit_udp(double t, Subcategory label, uint32_t src, uint32_t dst, uint16_t sport,
                uint16_t dport, uint8_t ttl, bool df, uint16_t id, const std::string& payload) {
    std::string seg = gen::FrameBuilder::udp(src, dst, sport, dport, payload);
    push(t, label, gen::FrameBuilder::ipv4(src, dst, 17, ttl, id, df, seg));
  }

  void emit_icmp(double t, Subcategory label, uint32_t src, uint32_t dst, uint8_t type,
                 uint8_t code, uint8_t ttl, uint16_t id, const std::string& rest) {
    std::string seg = gen::FrameBuilder::icmp(type, code, rest);
    push(t, label, gen::FrameBuilder::ipv4(src, dst, 1, ttl, id, false, seg));
  }

  void push(double t, Subcategory label, std::string frame) {
    uint64_t usec = uint64_t(std::llround((spec_.start_epoch + t) * 1e6));
    packets_.push_back({usec, std::move(frame), label});
  }

  std::string random_bytes(size_t n) {
    std::string s(n, '\0');
    for (auto& c : s) c = char(rng_.range_u32(0, 255));
    return s;
  }

  // Periodic 8-packet publish flows from the client devices to the broker.
  void emit_normal(size_t budget) {
    size_t left = budget;
    while (left > 0) {
      size_t flow = std::min<size_t>(8, left);
      left -= flow;
      uint32_t dev = gen::kDevices[rng_.below(gen::kDevices.size())];
      uint16_t sport = uint16_t(20000 + rng_.below(40000));
      uint32_t isn_d = rng_.range_u32(1, 0xFFFFFFF0u);
      uint32_t isn_b = rng_.range_u32(1, 0xFFFFFFF0u);
      double t = 1.0 + rng_.uniform01() * (spec_.duration - 3.0);
      std::string payload = std::string(1, char(0x30)) + random_bytes(19 + rng_.below(60));
      uint32_t plen = uint32_t(payload.size());
      struct Step {
        bool from_dev;
        uint16_t flags;
        uint32_t seq, ack;
        const std::string* data;
      };
      static const std::string empty;
      std::array<Step, 8> steps = {{
          {true, 0x002, isn_d, 0, &empty},
          {false, 0x012, isn_b, isn_d + 1, &empty},
          {true, 0x010, isn_d + 1, isn_b + 1, &empty},
          {true, 0x018, isn_d + 1, isn_b + 1, &payload},
          {false, 0x010, isn_b + 1, isn_d + 1 + plen, &empty},
          {true, 0x011, isn_d + 1 + plen, isn_b + 1, &empty},
          {false, 0x011, isn_b + 1, isn_d + 2 + plen, &empty},
          {true, 0x010, isn_d + 2 + plen, isn_b + 2, &empty},
      }};
      for (size_t i = 0; i < flow; ++i) {
        const Step& s = steps[i];
        uint32_t src = s.from_dev ? dev : gen::kBroker;
        uint32_t dst = s.from_dev ? gen::kBroker : dev;
        uint16_t sp = s.from_dev ? sport : uint16_t(1883);
        uint16_t dp = s.from_dev ? uint16_t(1883) : sport;
        uint16_t win = s.from_dev ? 29200 : 28960;
        emit_tcp(t, Subcategory::normal, src, dst, sp, dp, s.seq, s.ack, s.flags, win, 64, true,
                 next_ip_id(src), *s.data);
        t += rng_.uniform(0.0005, 0.02);
      }
    }
  }

  // Complete handshakes plus rapid GETs and 200 responses; a quarter of the
  // flows pipeline two GETs in one segment.
  void emit_http_flood(Subcategory sub, size_t budget, size_t nbots) {
    double ws = window_start(size_t(sub));
    size_t flows = (budget + 4) / 5;
    double stride = (window_len_ - 0.5) / double(flows);
    size_t left = budget;
    size_t f = 0;
    while (left > 0) {
      size_t flow = std::min<size_t>(5, left);
      left -= flow;
      uint32_t bot = gen::kBots[f % nbots];
      uint16_t sport = uint16_t(1024 + rng_.below(64000));
      uint32_t isn_a = rng_.range_u32(1, 0xFFFFFFF0u);
      uint32_t isn_v = rng_.range_u32(1, 0xFFFFFFF0u);
      double t = ws + stride * double(f) + rng_.uniform(0, stride * 0.25);
      bool pipelined = rng_.below(4) == 0;
      std::string get = "GET / HTTP/1.1\r\nHost: 192.168.100.9\r\n\r\n";
      if (pipelined) get += "GET /s HTTP/1.1\r\nHost: 192.168.100.9\r\n\r\n";
      std::string resp = "HTTP/1.1 200 OK\r\nContent-Length: 42\r\n\r\n" + random_bytes(42);
      uint32_t glen = uint32_t(get.size());
      struct Step {
        bool from_bot;
        uint16_t flags;
        uint32_t seq, ack;
        const std::string* data;
      };
      static const std::string empty;
      std::array<Step, 5> steps = {{
          {true, 0x002, isn_a, 0, &empty},
          {false, 0x012, isn_v, isn_a + 1, &empty},
          {true, 0x010, isn_a + 1, isn_v + 1, &empty},
          {true, 0x018, isn_a + 1, isn_v + 1, &get},
          {false, 0x018, isn_v + 1, isn_a + 1 + glen, &resp},
      }};
      for (size_t i = 0; i < flow; ++i) {
        const Step& s = steps[i];
        uint32_t src = s.from_bot ? bot : gen::kVictim;
        uint32_t dst = s.from_bot ? gen::kVictim : bot;
        uint16_t sp = s.from_bot ? sport : uint16_t(80);
        uint16_t dp = s.from_bot ? uint16_t(80) : sport;
        uint16_t win = s.from_bot ? 29200 : 28960;
        emit_tcp(t, sub, src, dst, sp, dp, s.seq, s.ack, s.flags, win, 64, true,
                 next_ip_id(src), *s.data);
        t += rng_.uniform(0.0002, 0.004);
      }
      ++f;
    }
  }

  void emit_syn_flood(Subcategory sub, size_t budget, size_t nbots) {
    double ws = window_start(size_t(sub));
    double step = (window_len_ - 0.5) / double(budget);
    for (size_t i = 0; i < budget; ++i) {
      uint32_t bot = gen::kBots[i % nbots];
      double t = ws + step * double(i) + rng_.uniform01() * step * 0.5;
      emit_tcp(t, sub, bot, gen::kVictim, uint16_t(rng_.range_u32(1024, 65535)), 80,
               rng_.range_u32(1, 0xFFFFFFF0u), 0, 0x002, 512, 64, false,
               uint16_t(rng_.range_u32(0, 65535)), "");
    }
  }

  void emit_udp_flood(Subcategory sub, size_t budget, size_t nbots) {
    double ws = window_start(size_t(sub));
    double step = (window_len_ - 0.5) / double(budget);
    for (size_t i = 0; i < budget; ++i) {
      uint32_t bot = gen::kBots[i % nbots];
      double t = ws + step * double(i) + rng_.uniform01() * step * 0.5;
      emit_udp(t, sub, bot, gen::kVictim, uint16_t(rng_.range_u32(1024, 65535)), 53, 64, false,
               uint16_t(rng_.range_u32(0, 65535)), random_bytes(200 + rng_.below(800)));
    }
  }

  // Malformed-flag TCP probes with odd windows, answered by victim resets,
  // plus ICMP echo pairs.
  void emit_os_fingerprint(size_t budget) {
    auto sub = Subcategory::os_fingerprint;
    uint32_t bot = gen::kBots[1];
    double ws = window_start(size_t(sub));
    double step = (window_len_ - 0.5) / double(budget);
    static constexpr std::array<uint16_t, 4> probe_flags = {0x000, 0x001, 0x029, 0x002};
    static constexpr std::array<uint16_t, 4> probe_windows = {128, 256, 1, 65535};
    static constexpr std::array<uint16_t, 4> probe_ports = {80, 22, 443, 135};
    static constexpr std::array<uint8_t, 4> probe_ttls = {32, 64, 128, 255};
    for (size_t i = 0; i < budget; ++i) {
      double t = ws + step * double(i) + rng_.uniform01() * step * 0.4;
      size_t kind = i % 6;
      if (kind < 4) {
        emit_tcp(t, sub, bot, gen::kVictim, uint16_t(1024 + rng_.below(64000)),
                 probe_ports[kind], rng_.range_u32(1, 0xFFFFFFF0u), 0, probe_flags[kind],
                 probe_windows[kind], probe_ttls[(i / 6) % 4], false,
                 uint16_t(rng_.range_u32(0, 65535)), "");
      } else if (kind == 4) {
        emit_icmp(t, sub, bot, gen::kVictim, 8, 0, 64, next_ip_id(bot), random_bytes(32));
      } else {
        emit_icmp(t, sub, gen::kVictim, bot, 0, 0, 64, next_ip_id(gen::kVictim),
                  random_bytes(32));
      }
    }
  }

  // SYN sweep over low ports with victim replies; every so often a UDP probe
  // draws an ICMP port-unreachable quoting the offending datagram.
  void emit_service_scan(size_t budget) {
    auto sub = Subcategory::service_scan;
    uint32_t bot = gen::kBots[2];
    double ws = window_start(size_t(sub));
    static constexpr std::array<uint16_t, 5> open_ports = {22, 80, 443, 1883, 8080};
    size_t emitted = 0;
    uint16_t port = 1;
    double t = ws;
    double step = (window_len_ - 0.5) / double(budget);
    auto advance = [&t, &step, this] {
      t += step * (0.6 + rng_.uniform01() * 0.8);
    };
    while (emitted < budget) {
      bool udp_probe = port % 10 == 7;
      bool open = std::find(open_ports.begin(), open_ports.end(), port) != open_ports.end();
      uint16_t sport = uint16_t(40000 + rng_.below(20000));
      if (udp_probe && port != 53) {
        std::string probe_payload = random_bytes(4 + rng_.below(8));
        emit_udp(t, sub, bot, gen::kVictim, sport, port, 64, false,
                 uint16_t(rng_.range_u32(0, 65535)), probe_payload);
        ++emitted;
        advance();
        if (emitted >= budget) break;
        // Quote of the probe: its IP header + first 8 payload bytes.
        std::string inner_udp = gen::FrameBuilder::udp(bot, gen::kVictim, sport, port,
                                                       probe_payload);
        std::string quoted_ip = gen::FrameBuilder::ipv4(bot, gen::kVictim, 17, 63,
                                                        uint16_t(rng_.range_u32(0, 65535)), false,
                                                        inner_udp);
        std::string inner = quoted_ip.substr(14, 20 + 8);
        std::string rest = std::string(4, '\0') + inner;
        emit_icmp(t, sub, gen::kVictim, bot, 3, 3, 64, next_ip_id(gen::kVictim), rest);
        ++emitted;
        advance();
      } else {
        uint32_t isn = rng_.range_u32(1, 0xFFFFFFF0u);
        emit_tcp(t, sub, bot, gen::kVictim, sport, port, isn, 0, 0x002, 1024, 64, false,
                 uint16_t(rng_.range_u32(0, 65535)), "");
        ++emitted;
        advance();
        if (emitted >= budget) break;
        if (open) {
          uint32_t isn_v = rng_.range_u32(1, 0xFFFFFFF0u);
          emit_tcp(t, sub, gen::kVictim, bot, port, sport, isn_v, isn + 1, 0x012, 64240, 64,
                   true, next_ip_id(gen::kVictim), "");
          ++emitted;
          advance();
          if (emitted >= budget) break;
          emit_tcp(t, sub, bot, gen::kVictim, sport, port, isn + 1, 0, 0x004, 0, 64, false,
                   uint16_t(rng_.range_u32(0, 65535)), "");
          ++emitted;
          advance();
        } else {
          emit_tcp(t, sub, gen::kVictim, bot, port, sport, 0, isn + 1, 0x014, 0, 64, true,
                   next_ip_id(gen::kVictim), "");
          ++emitted;
          advance();
        }
      }
      port = uint16_t(port >= 1024 ? 1 : port + 1);
    }
  }

  // One long-lived stream of large segments from a compromised device to the
  // collector bot, with periodic acknowledgments back.
  void emit_exfiltration(size_t budget) {
    auto sub = Subcategory::data_exfiltration;
    uint32_t dev = gen::kDevices[0];
    uint32_t bot = gen::kBots[3];
    uint16_t sport = uint16_t(30000 + rng_.below(10000));
    double ws = window_start(size_t(sub));
    double step = (window_len_ - 0.5) / double(std::max<size_t>(budget, 1));
    uint32_t isn_d = rng_.range_u32(1, 0xFFFFFFF0u);
    uint32_t isn_b = rng_.range_u32(1, 0xFFFFFFF0u);
    double t = ws;
    size_t emitted = 0;
    auto tick = [&t, step, this] { t += step * (0.7 + rng_.uniform01() * 0.6); };
    auto hs = [&](uint16_t flags, bool from_dev, uint32_t seq, uint32_t ack) {
      emit_tcp(t, sub, from_dev ? dev : bot, from_dev ? bot : dev,
               from_dev ? sport : uint16_t(4444), from_dev ? uint16_t(4444) : sport, seq, ack,
               flags, from_dev ? 29200 : 64240, 64, true,
               next_ip_id(from_dev ? dev : bot), "");
      ++emitted;
      tick();
    };
    if (budget >= 3) {
      hs(0x002, true, isn_d, 0);
      hs(0x012, false, isn_b, isn_d + 1);
      hs(0x010, true, isn_d + 1, isn_b + 1);
    }
    uint32_t seq = isn_d + 1;
    size_t since_ack = 0;
    while (emitted < budget) {
      if (since_ack >= 4) {
        emit_tcp(t, sub, bot, dev, 4444, sport, isn_b + 1, seq, 0x010, 64240, 64, true,
                 next_ip_id(bot), "");
        ++emitted;
        since_ack = 0;
        tick();
        continue;
      }
      std::string data = random_bytes(1000 + rng_.below(400));
      emit_tcp(t, sub, dev, bot, sport, 4444, seq, isn_b + 1, 0x018, 29200, 64, true,
               next_ip_id(dev), data);
      seq += uint32_t(data.size());
      ++emitted;
      ++since_ack;
      tick();
    }
  }

  // Low-rate tiny segments from a compromised device to the collector.
  void emit_keylogging(size_t budget) {
    auto sub = Subcategory::keylogging;
    uint32_t dev = gen::kDevices[1];
    uint32_t bot = gen::kBots[3];
    uint16_t sport = uint16_t(30000 + rng_.below(10000));
    double ws = window_start(size_t(sub));
    double step = (window_len_ - 0.5) / double(std::max<size_t>(budget, 1));
    uint32_t isn_d = rng_.range_u32(1, 0xFFFFFFF0u);
    uint32_t isn_b = rng_.range_u32(1, 0xFFFFFFF0u);
    double t = ws;
    size_t emitted = 0;
    auto tick = [&t, step, this] { t += step * (0.7 + rng_.uniform01() * 0.6); };
    if (budget >= 3) {
      emit_tcp(t, sub, dev, bot, sport, 6667, isn_d, 0, 0x002, 29200, 64, true, next_ip_id(dev),
               "");
      ++emitted;
      tick();
      emit_tcp(t, sub, bot, dev, 6667, sport, isn_b, isn_d + 1, 0x012, 64240, 64, true,
               next_ip_id(bot), "");
      ++emitted;
      tick();
      emit_tcp(t, sub, dev, bot, sport, 6667, isn_d + 1, isn_b + 1, 0x010, 29200, 64, true,
               next_ip_id(dev), "");
      ++emitted;
      tick();
    }
    uint32_t seq = isn_d + 1;
    size_t since_ack = 0;
    while (emitted < budget) {
      if (since_ack >= 3) {
        emit_tcp(t, sub, bot, dev, 6667, sport, isn_b + 1, seq, 0x010, 64240, 64, true,
                 next_ip_id(bot), "");
        ++emitted;
        since_ack = 0;
        tick();
        continue;
      }
      std::string data = random_bytes(4 + rng_.below(12));
      emit_tcp(t, sub, dev, bot, sport, 6667, seq, isn_b + 1, 0x018, 29200, 64, true,
               next_ip_id(dev), data);
      seq += uint32_t(data.size());
      ++emitted;
      ++since_ack;
      tick();
    }
  }

  ScenarioSpec spec_;
  Rng rng_;
  std::vector<Emitted> packets_;
  std::array<uint16_t, 256> ip_id_;
  double window_stride_ = 0, window_len_ = 0, window_margin_ = 0;
};

inline GenerateResult generate(const ScenarioSpec& spec, const std::string& out_dir) {
  TrafficGenerator g(spec);
  return g.generate(out_dir);
}

}  // namespace netids
