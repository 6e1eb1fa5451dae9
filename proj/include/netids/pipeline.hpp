#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "netids/http_methods.hpp"
#include "netids/labeling.hpp"
#include "netids/packet.hpp"
#include "netids/rng.hpp"
#include "netids/types.hpp"

namespace netids {

inline constexpr uint32_t kPortMissing = 65536;
inline constexpr size_t kNumericCount = 17;

inline constexpr std::array<std::string_view, kNumericCount> kNumericColumns = {
    "frame.len",       "ip.ttl",           "ip.ttl_embedded",
    "ip.id",           "ip.id_embedded",   "ip.hdr_len",
    "ip.hdr_len_embedded", "ip.len",       "ip.len_embedded",
    "tcp.time_delta",  "tcp.time_relative", "tcp.analysis.initial_rtt",
    "tcp.window_size_value", "tcp.hdr_len", "length",
    "stream",          "http.content_length",
};

inline constexpr std::array<std::string_view, 4> kOneHotColumns = {
    "ip.proto", "tcp.flags", "ip.flags.df", "http.response.code"};

// Post-merge feature table: timestamps and addresses dropped, port/length/
// stream pairs merged, comma values split, all gaps filled, duplicates gone.
struct IntermediateTable {
  std::vector<std::string> ip_proto;
  std::vector<int64_t> tcp_flags;
  std::vector<int64_t> ip_flags_df;
  std::vector<int64_t> http_response_code;
  std::vector<uint32_t> src_port, dst_port;
  std::vector<std::string> http_method;
  std::vector<std::array<double, kNumericCount>> numerics;
  std::vector<Category> category;
  std::vector<Subcategory> subcategory;
  std::vector<int> binary;

  size_t size() const { return ip_proto.size(); }
};

namespace detail {

// "outer,inner" -> (outer, inner); plain value -> (value, missing). Deeper
// nesting keeps the first two pieces.
inline std::pair<double, double> split_embedded(const std::string& cell,
                                                std::vector<std::string>* warnings) {
  if (cell.empty()) return {0.0, 0.0};
  size_t comma = cell.find(',');
  if (comma == std::string::npos) {
    auto v = parse_double(cell);
    return {v ? *v : 0.0, 0.0};
  }
  std::string base = cell.substr(0, comma);
  std::string emb = cell.substr(comma + 1);
  size_t second = emb.find(',');
  if (second != std::string::npos) {
    if (warnings) warnings->push_back("comma value deeper than outer,inner: " + cell);
    emb = emb.substr(0, second);
  }
  auto b = parse_double(base);
  auto e = parse_double(emb);
  return {b ? *b : 0.0, e ? *e : 0.0};
}

inline std::string dedup_key(const IntermediateTable& t, size_t i) {
  std::string key;
  key.reserve(160);
  auto add = [&key](const std::string& s) {
    key += s;
    key += '\x1f';
  };
  add(t.ip_proto[i]);
  add(std::to_string(t.tcp_flags[i]));
  add(std::to_string(t.ip_flags_df[i]));
  add(std::to_string(t.http_response_code[i]));
  add(std::to_string(t.src_port[i]));
  add(std::to_string(t.dst_port[i]));
  add(t.http_method[i]);
  for (double v : t.numerics[i]) add(format_double(v));
  add(std::to_string(int(t.category[i])));
  add(std::to_string(int(t.subcategory[i])));
  add(std::to_string(t.binary[i]));
  return key;
}

}  // namespace detail

// Column surgery + missing-value fill + exact dedup, in that order. The fill
// constants for df and tcp.flags are the observed column maximum plus one;
// ports use the fixed embedding code 65536.
inline IntermediateTable preprocess(const LabeledTable& table,
                                    std::vector<std::string>* warnings = nullptr) {
  int64_t max_flags = -1, max_df = -1;
  for (const auto& rec : table.records) {
    if (rec.tcp_flags) max_flags = std::max<int64_t>(max_flags, *rec.tcp_flags);
    if (rec.ip_flags_df) max_df = std::max<int64_t>(max_df, *rec.ip_flags_df);
  }
  int64_t fill_flags = max_flags + 1;
  int64_t fill_df = max_df + 1;

  IntermediateTable t;
  size_t n = table.size();
  t.ip_proto.reserve(n);
  t.numerics.reserve(n);
  for (size_t i = 0; i < n; ++i) {
    const PacketRecord& r = table.records[i];
    t.ip_proto.push_back(r.ip_proto);
    t.tcp_flags.push_back(r.tcp_flags ? int64_t(*r.tcp_flags) : fill_flags);
    t.ip_flags_df.push_back(r.ip_flags_df ? int64_t(*r.ip_flags_df) : fill_df);
    t.http_response_code.push_back(r.http_response_code ? int64_t(*r.http_response_code) : 0);
    uint32_t sp = kPortMissing, dp = kPortMissing;
    if (r.tcp_srcport)
      sp = *r.tcp_srcport;
    else if (r.udp_srcport)
      sp = *r.udp_srcport;
    if (r.tcp_dstport)
      dp = *r.tcp_dstport;
    else if (r.udp_dstport)
      dp = *r.udp_dstport;
    t.src_port.push_back(sp);
    t.dst_port.push_back(dp);
    t.http_method.push_back(r.http_request_method ? *r.http_request_method : "0");

    std::array<double, kNumericCount> num{};
    num[0] = double(r.frame_len);
    std::tie(num[1], num[2]) = detail::split_embedded(r.ip_ttl, warnings);
    std::tie(num[3], num[4]) = detail::split_embedded(r.ip_id, warnings);
    std::tie(num[5], num[6]) = detail::split_embedded(r.ip_hdr_len, warnings);
    std::tie(num[7], num[8]) = detail::split_embedded(r.ip_len, warnings);
    num[9] = r.tcp_time_delta.value_or(0.0);
    num[10] = r.tcp_time_relative.value_or(0.0);
    num[11] = r.tcp_analysis_initial_rtt.value_or(0.0);
    num[12] = r.tcp_window_size_value ? double(*r.tcp_window_size_value) : 0.0;
    num[13] = r.tcp_hdr_len ? double(*r.tcp_hdr_len) : 0.0;
    double length = 0.0;
    if (r.tcp_len)
      length = double(*r.tcp_len);
    else if (r.udp_length)
      length = double(*r.udp_length);
    num[14] = length;
    double stream = 0.0;
    if (r.tcp_stream)
      stream = double(*r.tcp_stream);
    else if (r.udp_stream)
      stream = double(*r.udp_stream);
    num[15] = stream;
    num[16] = r.http_content_length ? double(*r.http_content_length) : 0.0;
    t.numerics.push_back(num);

    t.category.push_back(table.category[i]);
    t.subcategory.push_back(table.subcategory[i]);
    t.binary.push_back(table.binary[i]);
  }

  IntermediateTable out;
  std::unordered_set<std::string> seen;
  seen.reserve(n * 2);
  for (size_t i = 0; i < n; ++i) {
    if (!seen.insert(detail::dedup_key(t, i)).second) continue;
    out.ip_proto.push_back(std::move(t.ip_proto[i]));
    out.tcp_flags.push_back(t.tcp_flags[i]);
    out.ip_flags_df.push_back(t.ip_flags_df[i]);
    out.http_response_code.push_back(t.http_response_code[i]);
    out.src_port.push_back(t.src_port[i]);
    out.dst_port.push_back(t.dst_port[i]);
    out.http_method.push_back(std::move(t.http_method[i]));
    out.numerics.push_back(t.numerics[i]);
    out.category.push_back(t.category[i]);
    out.subcategory.push_back(t.subcategory[i]);
    out.binary.push_back(t.binary[i]);
  }
  return out;
}

struct EncodingMeta {
  std::vector<std::string> proto_dict;
  std::vector<int64_t> flags_dict;
  std::vector<int64_t> df_dict;
  std::vector<int64_t> response_dict;
  std::array<double, kNumericCount> num_min{}, num_max{};

  size_t dense_width() const {
    return proto_dict.size() + flags_dict.size() + df_dict.size() + response_dict.size() +
           kNumericCount;
  }

  std::vector<std::string> column_names() const {
    std::vector<std::string> names;
    for (const auto& v : proto_dict) names.push_back("ip.proto=" + v);
    for (auto v : flags_dict) names.push_back("tcp.flags=" + std::to_string(v));
    for (auto v : df_dict) names.push_back("ip.flags.df=" + std::to_string(v));
    for (auto v : response_dict) names.push_back("http.response.code=" + std::to_string(v));
    for (auto n : kNumericColumns) names.emplace_back(n);
    return names;
  }

  bool operator==(const EncodingMeta&) const = default;
};

// Dictionaries and scaling ranges come from the training rows only; encoding
// any other split reuses them untouched.
inline EncodingMeta fit_encoders(const IntermediateTable& t,
                                 const std::vector<uint32_t>& train_rows) {
  if (train_rows.empty()) throw TooFewRows("no training rows to fit encoders");
  EncodingMeta meta;
  std::vector<std::string> protos;
  std::vector<int64_t> flags, dfs, codes;
  for (uint32_t i : train_rows) {
    protos.push_back(t.ip_proto[i]);
    flags.push_back(t.tcp_flags[i]);
    dfs.push_back(t.ip_flags_df[i]);
    codes.push_back(t.http_response_code[i]);
  }
  auto uniq_sorted = [](auto& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  uniq_sorted(protos);
  uniq_sorted(flags);
  uniq_sorted(dfs);
  uniq_sorted(codes);
  meta.proto_dict = std::move(protos);
  meta.flags_dict = std::move(flags);
  meta.df_dict = std::move(dfs);
  meta.response_dict = std::move(codes);
  meta.num_min.fill(std::numeric_limits<double>::infinity());
  meta.num_max.fill(-std::numeric_limits<double>::infinity());
  for (uint32_t i : train_rows)
    for (size_t c = 0; c < kNumericCount; ++c) {
      meta.num_min[c] = std::min(meta.num_min[c], t.numerics[i][c]);
      meta.num_max[c] = std::max(meta.num_max[c], t.numerics[i][c]);
    }
  return meta;
}

struct EncodedDataset {
  size_t rows = 0;
  size_t dense_width = 0;
  std::vector<float> dense;        // rows × dense_width, in [−1, 1]
  std::vector<uint32_t> ports;     // rows × 2 (src, dst), in [0, 65536]
  std::vector<uint32_t> methods;   // rows × 1, in [0, 92]
  std::vector<uint8_t> labels_mc;  // 0..3
  std::vector<uint8_t> labels_bin;
  std::vector<uint8_t> subcat;  // 0..10, keeps binary per-subcategory splits possible
  EncodingMeta meta;

  const float* dense_row(size_t i) const { return dense.data() + i * dense_width; }
};

inline EncodedDataset encode(const IntermediateTable& t, const EncodingMeta& meta) {
  EncodedDataset ds;
  ds.rows = t.size();
  ds.dense_width = meta.dense_width();
  ds.meta = meta;
  ds.dense.assign(ds.rows * ds.dense_width, 0.0f);
  ds.ports.resize(ds.rows * 2);
  ds.methods.resize(ds.rows);
  ds.labels_mc.resize(ds.rows);
  ds.labels_bin.resize(ds.rows);
  ds.subcat.resize(ds.rows);

  size_t off_proto = 0;
  size_t off_flags = off_proto + meta.proto_dict.size();
  size_t off_df = off_flags + meta.flags_dict.size();
  size_t off_code = off_df + meta.df_dict.size();
  size_t off_num = off_code + meta.response_dict.size();

  auto onehot = [](auto& dict, const auto& value) -> std::optional<size_t> {
    auto it = std::lower_bound(dict.begin(), dict.end(), value);
    if (it != dict.end() && *it == value) return size_t(it - dict.begin());
    return std::nullopt;  // unseen category: all-zeros group
  };

  for (size_t i = 0; i < ds.rows; ++i) {
    float* row = ds.dense.data() + i * ds.dense_width;
    if (auto k = onehot(meta.proto_dict, t.ip_proto[i])) row[off_proto + *k] = 1.0f;
    if (auto k = onehot(meta.flags_dict, t.tcp_flags[i])) row[off_flags + *k] = 1.0f;
    if (auto k = onehot(meta.df_dict, t.ip_flags_df[i])) row[off_df + *k] = 1.0f;
    if (auto k = onehot(meta.response_dict, t.http_response_code[i])) row[off_code + *k] = 1.0f;
    for (size_t c = 0; c < kNumericCount; ++c) {
      double lo = meta.num_min[c], hi = meta.num_max[c];
      double scaled = 0.0;
      if (hi > lo) scaled = std::clamp(2.0 * (t.numerics[i][c] - lo) / (hi - lo) - 1.0, -1.0, 1.0);
      row[off_num + c] = float(scaled);
    }
    ds.ports[i * 2] = t.src_port[i];
    ds.ports[i * 2 + 1] = t.dst_port[i];
    ds.methods[i] = http_method_index(t.http_method[i]);
    ds.labels_mc[i] = uint8_t(class_code_of(t.category[i]));
    ds.labels_bin[i] = uint8_t(t.binary[i]);
    ds.subcat[i] = uint8_t(t.subcategory[i]);
  }
  return ds;
}

struct SplitIndices {
  std::vector<uint32_t> train, validation, test;
};

// Stratified 64/16/20 split. Global split sizes are fixed first by largest
// remainder, then distributed across classes the same way, so both the
// global ±1 bound and per-class proportionality hold.
inline SplitIndices split_stratified(const std::vector<uint8_t>& labels, uint64_t seed,
                                     double train_ratio = 0.64, double val_ratio = 0.16) {
  size_t n = labels.size();
  if (n == 0) throw TooFewRows("empty label vector");
  uint8_t num_classes = 0;
  for (uint8_t c : labels) num_classes = std::max<uint8_t>(num_classes, uint8_t(c + 1));
  std::vector<std::vector<uint32_t>> by_class(num_classes);
  for (size_t i = 0; i < n; ++i) by_class[labels[i]].push_back(uint32_t(i));
  for (uint8_t c = 0; c < num_classes; ++c)
    if (by_class[c].size() < 5)
      throw TooFewRows("class " + std::to_string(c) + " has fewer than 5 rows");

  double test_ratio = 1.0 - train_ratio - val_ratio;
  auto global_target = [n](double ratio) { return ratio * double(n); };
  size_t g_test = size_t(std::floor(global_target(test_ratio)));
  size_t g_val = size_t(std::floor(global_target(val_ratio)));
  size_t g_train = size_t(std::floor(global_target(train_ratio)));
  // Hand out the rounding slack in fixed priority order by fractional part.
  while (g_train + g_val + g_test < n) {
    double ftr = global_target(train_ratio) - double(g_train);
    double fva = global_target(val_ratio) - double(g_val);
    double fte = global_target(test_ratio) - double(g_test);
    if (ftr >= fva && ftr >= fte)
      ++g_train;
    else if (fva >= fte)
      ++g_val;
    else
      ++g_test;
  }

  // Per-class counts for one split: floor everywhere, then +1 to the classes
  // with the largest fractional remainders until the global target is met.
  auto apportion = [num_classes](const std::vector<size_t>& avail, double frac, size_t target) {
    std::vector<size_t> want(num_classes);
    std::vector<std::pair<double, uint8_t>> rem;
    size_t total = 0;
    for (uint8_t c = 0; c < num_classes; ++c) {
      double ideal = frac * double(avail[c]);
      want[c] = size_t(std::floor(ideal));
      want[c] = std::min(want[c], avail[c]);
      total += want[c];
      rem.push_back({ideal - double(want[c]), c});
    }
    std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first > b.first;
      return a.second < b.second;
    });
    size_t k = 0;
    while (total < target && k < rem.size()) {
      uint8_t c = rem[k++].second;
      if (want[c] < avail[c]) {
        ++want[c];
        ++total;
      }
    }
    // Fixed-point fallback when remainder candidates were capped.
    for (uint8_t c = 0; total < target && c < num_classes; ++c)
      while (total < target && want[c] < avail[c]) {
        ++want[c];
        ++total;
      }
    if (total != target) throw TooFewRows("split apportionment infeasible");
    return want;
  };

  std::vector<size_t> avail(num_classes);
  for (uint8_t c = 0; c < num_classes; ++c) avail[c] = by_class[c].size();
  auto test_per_class = apportion(avail, test_ratio, g_test);
  std::vector<size_t> remaining(num_classes);
  for (uint8_t c = 0; c < num_classes; ++c) remaining[c] = avail[c] - test_per_class[c];
  // Validation share relative to what is left after the test cut.
  double val_frac_of_rest = val_ratio / (train_ratio + val_ratio);
  auto val_per_class = apportion(remaining, val_frac_of_rest, g_val);

  SplitIndices out;
  Rng rng(seed);
  for (uint8_t c = 0; c < num_classes; ++c) {
    auto& idx = by_class[c];
    rng.shuffle(idx);
    size_t te = test_per_class[c], va = val_per_class[c];
    out.test.insert(out.test.end(), idx.begin(), idx.begin() + te);
    out.validation.insert(out.validation.end(), idx.begin() + te, idx.begin() + te + va);
    out.train.insert(out.train.end(), idx.begin() + te + va, idx.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.validation.begin(), out.validation.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

// w_c = max class count / class count. The most frequent class gets 1.
inline std::vector<double> class_weights(const std::vector<uint8_t>& labels, size_t num_classes) {
  std::vector<uint64_t> counts(num_classes, 0);
  for (uint8_t c : labels) {
    if (c >= num_classes) throw CodeOutOfRange("label code " + std::to_string(c));
    counts[c]++;
  }
  uint64_t maxc = 0;
  for (auto c : counts) maxc = std::max(maxc, c);
  std::vector<double> w(num_classes);
  for (size_t c = 0; c < num_classes; ++c) {
    if (counts[c] == 0) throw ZeroClass("class " + std::to_string(c) + " absent");
    w[c] = double(maxc) / double(counts[c]);
  }
  return w;
}

}  // namespace netids
