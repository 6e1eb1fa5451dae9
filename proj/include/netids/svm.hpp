#pragma once

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "netids/common.hpp"
#include "netids/matrix.hpp"
#include "netids/pipeline.hpp"
#include "netids/rng.hpp"

namespace netids {

inline constexpr std::array<uint32_t, 11> kCommonPorts = {20, 21, 22, 23, 25, 42,
                                                          43, 53, 80, 161, 443};

struct PortEncoding {
  std::string token;  // the port's own value, or "other" once bucketed
  int bucket_low = 0;
  int bucket_high = 0;
};

inline PortEncoding bucket_ports(uint32_t port) {
  for (uint32_t p : kCommonPorts)
    if (port == p) return {std::to_string(port), 0, 0};
  if (port <= 1023) return {"other", 1, 0};
  return {"other", 0, 1};  // registered/private range and the missing code
}

inline std::string collapse_methods(const std::string& method) {
  if (method.find(',') != std::string::npos) return "MULTIPLE";
  static const std::array<std::string_view, 7> singletons = {"POST", "GET",  "OPTIONS", "PROPFIND",
                                                             "HEAD", "TRACE", "0"};
  for (auto s : singletons)
    if (method == s) return method;
  return "0";
}

// The baseline's own feature view of the intermediate table: bucketed ports,
// collapsed methods, one-hot everywhere, numerics scaled to [−1, 1].
struct SvmMeta {
  std::vector<std::string> proto_dict;
  std::vector<int64_t> flags_dict, df_dict, response_dict;
  std::vector<std::string> src_token_dict, dst_token_dict;
  std::vector<int64_t> src_low_dict, src_high_dict, dst_low_dict, dst_high_dict;
  std::vector<std::string> method_dict;
  std::array<double, kNumericCount> num_min{}, num_max{};

  size_t width() const {
    return proto_dict.size() + flags_dict.size() + df_dict.size() + response_dict.size() +
           src_token_dict.size() + src_low_dict.size() + src_high_dict.size() +
           dst_token_dict.size() + dst_low_dict.size() + dst_high_dict.size() +
           method_dict.size() + kNumericCount;
  }
};

inline SvmMeta fit_svm_meta(const IntermediateTable& t, const std::vector<uint32_t>& rows) {
  if (rows.empty()) throw TooFewRows("no rows to fit baseline encoders");
  SvmMeta meta;
  std::vector<std::string> protos, src_tok, dst_tok, methods;
  std::vector<int64_t> flags, dfs, codes, sl, sh, dl, dh;
  for (uint32_t i : rows) {
    protos.push_back(t.ip_proto[i]);
    flags.push_back(t.tcp_flags[i]);
    dfs.push_back(t.ip_flags_df[i]);
    codes.push_back(t.http_response_code[i]);
    PortEncoding s = bucket_ports(t.src_port[i]), d = bucket_ports(t.dst_port[i]);
    src_tok.push_back(s.token);
    dst_tok.push_back(d.token);
    sl.push_back(s.bucket_low);
    sh.push_back(s.bucket_high);
    dl.push_back(d.bucket_low);
    dh.push_back(d.bucket_high);
    methods.push_back(collapse_methods(t.http_method[i]));
  }
  auto uniq = [](auto& v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  };
  uniq(protos);
  uniq(flags);
  uniq(dfs);
  uniq(codes);
  uniq(src_tok);
  uniq(dst_tok);
  uniq(sl);
  uniq(sh);
  uniq(dl);
  uniq(dh);
  uniq(methods);
  meta.proto_dict = std::move(protos);
  meta.flags_dict = std::move(flags);
  meta.df_dict = std::move(dfs);
  meta.response_dict = std::move(codes);
  meta.src_token_dict = std::move(src_tok);
  meta.dst_token_dict = std::move(dst_tok);
  meta.src_low_dict = std::move(sl);
  meta.src_high_dict = std::move(sh);
  meta.dst_low_dict = std::move(dl);
  meta.dst_high_dict = std::move(dh);
  meta.method_dict = std::move(methods);
  meta.num_min.fill(std::numeric_limits<double>::infinity());
  meta.num_max.fill(-std::numeric_limits<double>::infinity());
  for (uint32_t i : rows)
    for (size_t c = 0; c < kNumericCount; ++c) {
      meta.num_min[c] = std::min(meta.num_min[c], t.numerics[i][c]);
      meta.num_max[c] = std::max(meta.num_max[c], t.numerics[i][c]);
    }
  return meta;
}

inline Mat<float> encode_svm(const IntermediateTable& t, const std::vector<uint32_t>& rows,
                             const SvmMeta& meta) {
  Mat<float> x(rows.size(), meta.width());
  auto onehot = [](const auto& dict, const auto& value, float* out) {
    auto it = std::lower_bound(dict.begin(), dict.end(), value);
    if (it != dict.end() && *it == value) out[it - dict.begin()] = 1.0f;
  };
  for (size_t r = 0; r < rows.size(); ++r) {
    uint32_t i = rows[r];
    float* out = x.row(r);
    size_t off = 0;
    onehot(meta.proto_dict, t.ip_proto[i], out + off);
    off += meta.proto_dict.size();
    onehot(meta.flags_dict, t.tcp_flags[i], out + off);
    off += meta.flags_dict.size();
    onehot(meta.df_dict, t.ip_flags_df[i], out + off);
    off += meta.df_dict.size();
    onehot(meta.response_dict, t.http_response_code[i], out + off);
    off += meta.response_dict.size();
    PortEncoding s = bucket_ports(t.src_port[i]), d = bucket_ports(t.dst_port[i]);
    onehot(meta.src_token_dict, s.token, out + off);
    off += meta.src_token_dict.size();
    onehot(meta.src_low_dict, int64_t(s.bucket_low), out + off);
    off += meta.src_low_dict.size();
    onehot(meta.src_high_dict, int64_t(s.bucket_high), out + off);
    off += meta.src_high_dict.size();
    onehot(meta.dst_token_dict, d.token, out + off);
    off += meta.dst_token_dict.size();
    onehot(meta.dst_low_dict, int64_t(d.bucket_low), out + off);
    off += meta.dst_low_dict.size();
    onehot(meta.dst_high_dict, int64_t(d.bucket_high), out + off);
    off += meta.dst_high_dict.size();
    onehot(meta.method_dict, collapse_methods(t.http_method[i]), out + off);
    off += meta.method_dict.size();
    for (size_t c = 0; c < kNumericCount; ++c) {
      double lo = meta.num_min[c], hi = meta.num_max[c];
      double v = 0.0;
      if (hi > lo) v = std::clamp(2.0 * (t.numerics[i][c] - lo) / (hi - lo) - 1.0, -1.0, 1.0);
      out[off + c] = float(v);
    }
  }
  return x;
}

struct SvmModel {
  size_t num_classes = 0;
  Mat<double> w;  // K × D
  std::vector<double> b;
  double C = 1.0;
  size_t epochs_used = 0;
  bool converged = false;
};

namespace detail {

// Exact class-weighted objective for one one-vs-rest separator:
// (λ/2)||w||² + (1/S)·Σ cwᵢ·hinge, with λ = 1/(C·S). Dividing the usual
// C-scaled objective by C·S keeps values O(1) for every C in the grid.
inline double svc_objective(const Mat<float>& x, const std::vector<int8_t>& t,
                            const std::vector<double>& sw, double sum_w, double lambda,
                            const std::vector<double>& w, double b) {
  double reg = 0;
  for (double v : w) reg += v * v;
  double hinge = 0;
  for (size_t i = 0; i < x.rows; ++i) {
    const float* row = x.row(i);
    double f = b;
    for (size_t j = 0; j < x.cols; ++j) f += w[j] * double(row[j]);
    double m = 1.0 - double(t[i]) * f;
    if (m > 0) hinge += sw[i] * m;
  }
  return 0.5 * lambda * reg + hinge / sum_w;
}

}  // namespace detail

// One-vs-rest linear SVC by seeded minibatch subgradient descent with
// per-epoch iterate averaging; the best averaged iterate by exact objective
// is kept. Stops once the best objective improves by less than tol in an
// epoch (after a short minimum), or at max_iter epochs.
inline SvmModel fit_linear_svc(const Mat<float>& x, const std::vector<uint8_t>& y, size_t k,
                               double C, const std::vector<double>& cw, size_t max_iter,
                               uint64_t seed, double tol = 1e-4) {
  if (!(C > 0)) throw DataError("penalty C must be positive");
  if (x.rows != y.size()) throw ShapeMismatch("svc rows vs labels");
  size_t n = x.rows, d = x.cols;
  constexpr size_t kBatch = 64;
  constexpr size_t kMinEpochs = 5;
  SvmModel model;
  model.num_classes = k;
  model.w = Mat<double>(k, d);
  model.b.assign(k, 0.0);
  model.C = C;
  model.converged = true;

  std::vector<double> sw(n);
  double sum_w = 0;
  for (size_t i = 0; i < n; ++i) {
    sw[i] = cw[y[i]];
    sum_w += sw[i];
  }
  double lambda = 1.0 / (C * sum_w);

  size_t worst_epochs = 0;
  for (size_t c = 0; c < k; ++c) {
    std::vector<int8_t> t(n);
    for (size_t i = 0; i < n; ++i) t[i] = y[i] == c ? 1 : -1;
    std::vector<double> w(d, 0.0), wsum(d, 0.0), best_w(d, 0.0);
    double b = 0, bsum = 0, best_b = 0;
    double best_obj = detail::svc_objective(x, t, sw, sum_w, lambda, w, b);
    Rng rng(seed * 1000003 + c);
    std::vector<uint32_t> order(n);
    for (size_t i = 0; i < n; ++i) order[i] = uint32_t(i);
    size_t step = 0;
    size_t epoch = 0;
    bool converged = false;
    for (epoch = 1; epoch <= max_iter; ++epoch) {
      rng.shuffle(order);
      std::fill(wsum.begin(), wsum.end(), 0.0);
      bsum = 0;
      size_t epoch_steps = 0;
      for (size_t off = 0; off < n; off += kBatch) {
        size_t bsz = std::min(kBatch, n - off);
        ++step;
        double eta = 0.5 / std::sqrt(double(step));
        // Subgradient: λw − (N/(S·|B|))·Σ_violators cwᵢ tᵢ xᵢ.
        double scale = eta * double(n) / (sum_w * double(bsz));
        for (size_t j = 0; j < d; ++j) w[j] *= 1.0 - eta * lambda;
        double db = 0;
        for (size_t bi = 0; bi < bsz; ++bi) {
          uint32_t i = order[off + bi];
          const float* row = x.row(i);
          double f = b;
          for (size_t j = 0; j < d; ++j) f += w[j] * double(row[j]);
          if (double(t[i]) * f < 1.0) {
            double g = scale * sw[i] * double(t[i]);
            for (size_t j = 0; j < d; ++j) w[j] += g * double(row[j]);
            db += g;
          }
        }
        b += db;
        for (size_t j = 0; j < d; ++j) wsum[j] += w[j];
        bsum += b;
        ++epoch_steps;
      }
      std::vector<double> w_avg(d);
      for (size_t j = 0; j < d; ++j) w_avg[j] = wsum[j] / double(epoch_steps);
      double b_avg = bsum / double(epoch_steps);
      double obj = detail::svc_objective(x, t, sw, sum_w, lambda, w_avg, b_avg);
      double improvement = best_obj - obj;
      if (obj < best_obj) {
        best_obj = obj;
        best_w = std::move(w_avg);
        best_b = b_avg;
      }
      if (epoch >= kMinEpochs && improvement < tol) {
        converged = true;
        break;
      }
    }
    if (!converged) model.converged = false;
    worst_epochs = std::max(worst_epochs, std::min(epoch, max_iter));
    std::copy(best_w.begin(), best_w.end(), model.w.row(c));
    model.b[c] = best_b;
  }
  model.epochs_used = worst_epochs;
  return model;
}

inline std::vector<uint8_t> predict_svm(const SvmModel& model, const Mat<float>& x) {
  std::vector<uint8_t> out(x.rows);
  for (size_t i = 0; i < x.rows; ++i) {
    const float* row = x.row(i);
    size_t arg = 0;
    double best = -std::numeric_limits<double>::infinity();
    for (size_t c = 0; c < model.num_classes; ++c) {
      const double* w = model.w.row(c);
      double f = model.b[c];
      for (size_t j = 0; j < x.cols; ++j) f += w[j] * double(row[j]);
      if (f > best) {
        best = f;
        arg = c;
      }
    }
    out[i] = uint8_t(arg);
  }
  return out;
}

// Per-class round-robin dealing after a seeded shuffle keeps folds
// stratified to within one row per class.
inline std::vector<int> stratified_folds(const std::vector<uint8_t>& y, size_t k, int folds,
                                         uint64_t seed) {
  std::vector<std::vector<uint32_t>> by_class(k);
  for (size_t i = 0; i < y.size(); ++i) by_class.at(y[i]).push_back(uint32_t(i));
  for (size_t c = 0; c < k; ++c)
    if (by_class[c].size() < size_t(folds))
      throw TooFewRows("class " + std::to_string(c) + " smaller than fold count");
  std::vector<int> fold(y.size(), 0);
  Rng rng(seed);
  for (size_t c = 0; c < k; ++c) {
    auto& idx = by_class[c];
    rng.shuffle(idx);
    for (size_t i = 0; i < idx.size(); ++i) fold[idx[i]] = int(i % size_t(folds));
  }
  return fold;
}

struct GridSearchResult {
  double best_c = 0;
  std::vector<std::pair<double, double>> accuracy_by_c;  // (C, mean CV accuracy)
};

inline GridSearchResult grid_search_cv(const Mat<float>& x, const std::vector<uint8_t>& y,
                                       size_t k, const std::vector<double>& c_grid, int folds,
                                       uint64_t seed, size_t max_iter = 10000) {
  auto fold = stratified_folds(y, k, folds, seed);
  GridSearchResult result;
  double best_acc = -1;
  for (double C : c_grid) {
    double acc_sum = 0;
    for (int f = 0; f < folds; ++f) {
      std::vector<uint32_t> train_rows, val_rows;
      for (size_t i = 0; i < y.size(); ++i)
        (fold[i] == f ? val_rows : train_rows).push_back(uint32_t(i));
      Mat<float> xt(train_rows.size(), x.cols), xv(val_rows.size(), x.cols);
      std::vector<uint8_t> yt(train_rows.size()), yv(val_rows.size());
      for (size_t i = 0; i < train_rows.size(); ++i) {
        std::copy_n(x.row(train_rows[i]), x.cols, xt.row(i));
        yt[i] = y[train_rows[i]];
      }
      for (size_t i = 0; i < val_rows.size(); ++i) {
        std::copy_n(x.row(val_rows[i]), x.cols, xv.row(i));
        yv[i] = y[val_rows[i]];
      }
      auto cw = class_weights(yt, k);
      SvmModel model = fit_linear_svc(xt, yt, k, C, cw, max_iter, seed + uint64_t(f));
      auto pred = predict_svm(model, xv);
      size_t correct = 0;
      for (size_t i = 0; i < yv.size(); ++i)
        if (pred[i] == yv[i]) ++correct;
      acc_sum += yv.empty() ? 0.0 : double(correct) / double(yv.size());
    }
    double mean_acc = acc_sum / double(folds);
    result.accuracy_by_c.push_back({C, mean_acc});
    if (mean_acc > best_acc) {  // strict: ties keep the smaller earlier C
      best_acc = mean_acc;
      result.best_c = C;
    }
  }
  return result;
}

// Class-proportional subsample by largest remainder; deterministic.
inline std::vector<uint32_t> stratified_subsample_indices(const std::vector<uint8_t>& y, size_t k,
                                                          size_t n, uint64_t seed) {
  if (n > y.size()) throw TooFewRows("subsample larger than table");
  std::vector<std::vector<uint32_t>> by_class(k);
  for (size_t i = 0; i < y.size(); ++i) by_class.at(y[i]).push_back(uint32_t(i));
  double frac = double(n) / double(y.size());
  std::vector<size_t> want(k);
  std::vector<std::pair<double, size_t>> rem;
  size_t total = 0;
  for (size_t c = 0; c < k; ++c) {
    double ideal = frac * double(by_class[c].size());
    want[c] = size_t(ideal);
    total += want[c];
    rem.push_back({ideal - double(want[c]), c});
  }
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  for (size_t i = 0; total < n && i < rem.size(); ++i) {
    size_t c = rem[i].second;
    if (want[c] < by_class[c].size()) {
      ++want[c];
      ++total;
    }
  }
  for (size_t c = 0; total < n && c < k; ++c)
    while (total < n && want[c] < by_class[c].size()) {
      ++want[c];
      ++total;
    }
  Rng rng(seed);
  std::vector<uint32_t> out;
  out.reserve(n);
  for (size_t c = 0; c < k; ++c) {
    auto& idx = by_class[c];
    rng.shuffle(idx);
    out.insert(out.end(), idx.begin(), idx.begin() + want[c]);
  }
  std::sort(out.begin(), out.end());
  return out;
}

inline void save_svm(const SvmModel& model, const std::string& path) {
  std::string out;
  out += "netids-svc 1\n";
  out += "classes " + std::to_string(model.num_classes) + '\n';
  out += "width " + std::to_string(model.w.cols) + '\n';
  out += "C " + format_double(model.C) + '\n';
  out += "epochs " + std::to_string(model.epochs_used) + '\n';
  out += std::string("converged ") + (model.converged ? "1" : "0") + '\n';
  out += "end\n";
  for (double v : model.w.a) put_u64le(out, std::bit_cast<uint64_t>(v));
  for (double v : model.b) put_u64le(out, std::bit_cast<uint64_t>(v));
  put_u32le(out, crc32(out));
  write_file(path, out);
}

inline SvmModel load_svm(const std::string& path) {
  std::string raw = read_file(path);
  if (raw.size() < 4) throw SchemaMismatch(path + ": too short");
  uint32_t stored = get_u32le(reinterpret_cast<const unsigned char*>(raw.data()) + raw.size() - 4);
  std::string body = raw.substr(0, raw.size() - 4);
  if (crc32(body) != stored) throw ChecksumMismatch(path + ": svc file crc mismatch");
  size_t pos = 0;
  auto next_line = [&]() {
    size_t nl = body.find('\n', pos);
    if (nl == std::string::npos) throw SchemaMismatch(path + ": truncated header");
    std::string line = body.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };
  if (next_line() != "netids-svc 1") throw SchemaMismatch(path + ": not a svc file");
  SvmModel model;
  size_t width = 0;
  for (std::string line = next_line(); line != "end"; line = next_line()) {
    auto parts = split(line, ' ');
    if (parts.size() != 2) throw SchemaMismatch(path + ": bad header line: " + line);
    if (parts[0] == "classes")
      model.num_classes = size_t(*parse_int(parts[1]));
    else if (parts[0] == "width")
      width = size_t(*parse_int(parts[1]));
    else if (parts[0] == "C")
      model.C = *parse_double(parts[1]);
    else if (parts[0] == "epochs")
      model.epochs_used = size_t(*parse_int(parts[1]));
    else if (parts[0] == "converged")
      model.converged = parts[1] == "1";
  }
  model.w = Mat<double>(model.num_classes, width);
  model.b.resize(model.num_classes);
  size_t need = (model.w.a.size() + model.b.size()) * 8;
  if (body.size() - pos != need) throw SchemaMismatch(path + ": payload size mismatch");
  const unsigned char* p = reinterpret_cast<const unsigned char*>(body.data()) + pos;
  for (auto& v : model.w.a) {
    v = std::bit_cast<double>(get_u64le(p));
    p += 8;
  }
  for (auto& v : model.b) {
    v = std::bit_cast<double>(get_u64le(p));
    p += 8;
  }
  return model;
}

}  // namespace netids
