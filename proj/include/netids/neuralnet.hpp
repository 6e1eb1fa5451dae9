#pragma once

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "netids/common.hpp"
#include "netids/matrix.hpp"
#include "netids/pipeline.hpp"
#include "netids/rng.hpp"

namespace netids {

inline constexpr size_t kPortVocab = 65537;  // 0..65535 + missing code
inline constexpr size_t kPortDim = 16;
inline constexpr size_t kMethodDim = 4;
inline constexpr size_t kHidden = 512;
inline constexpr size_t kEmbWidth = 2 * kPortDim + kMethodDim;  // 36

template <typename T>
struct FnnWeights {
  size_t num_classes = 0;
  size_t dense_width = 0;
  size_t d_in = 0;
  bool frozen_embeddings = false;
  Mat<T> port_emb;    // 65537×16, shared by src and dst lookups
  Mat<T> method_emb;  // 93×4
  Mat<T> w1, w2, w3;
  std::vector<T> b1, b2, b3;
};

template <typename T>
FnnWeights<T> init_fnn(size_t num_classes, size_t dense_width, uint64_t seed) {
  FnnWeights<T> w;
  w.num_classes = num_classes;
  w.dense_width = dense_width;
  w.d_in = dense_width + kEmbWidth;
  w.port_emb = Mat<T>(kPortVocab, kPortDim);
  w.method_emb = Mat<T>(kMethodVocabSize, kMethodDim);
  w.w1 = Mat<T>(w.d_in, kHidden);
  w.w2 = Mat<T>(kHidden, kHidden);
  w.w3 = Mat<T>(kHidden, num_classes);
  w.b1.assign(kHidden, T(0));
  w.b2.assign(kHidden, T(0));
  w.b3.assign(num_classes, T(0));
  Rng rng(seed);
  auto fill = [&rng](Mat<T>& m, double bound) {
    for (auto& v : m.a) v = T(rng.uniform(-bound, bound));
  };
  fill(w.port_emb, 0.05);
  fill(w.method_emb, 0.05);
  fill(w.w1, std::sqrt(6.0 / double(w.d_in)));
  fill(w.w2, std::sqrt(6.0 / double(kHidden)));
  fill(w.w3, std::sqrt(6.0 / double(kHidden)));
  return w;
}

// Input row layout: [dense | src-port embedding | dst-port embedding |
// method embedding].
template <typename T>
void gather_inputs(const EncodedDataset& ds, const FnnWeights<T>& w, const uint32_t* idx,
                   size_t batch, Mat<T>& x) {
  if (ds.dense_width != w.dense_width) throw ShapeMismatch("dataset width vs model width");
  if (x.rows != batch || x.cols != w.d_in) x = Mat<T>(batch, w.d_in);
  for (size_t i = 0; i < batch; ++i) {
    uint32_t r = idx[i];
    T* out = x.row(i);
    const float* dense = ds.dense_row(r);
    for (size_t j = 0; j < ds.dense_width; ++j) out[j] = T(dense[j]);
    uint32_t sp = ds.ports[r * 2], dp = ds.ports[r * 2 + 1];
    uint32_t mm = ds.methods[r];
    if (sp >= kPortVocab || dp >= kPortVocab || mm >= kMethodVocabSize)
      throw CodeOutOfRange("embedding index out of range at row " + std::to_string(r));
    const T* se = w.port_emb.row(sp);
    const T* de = w.port_emb.row(dp);
    const T* me = w.method_emb.row(mm);
    T* p = out + ds.dense_width;
    for (size_t j = 0; j < kPortDim; ++j) p[j] = se[j];
    for (size_t j = 0; j < kPortDim; ++j) p[kPortDim + j] = de[j];
    for (size_t j = 0; j < kMethodDim; ++j) p[2 * kPortDim + j] = me[j];
  }
}

template <typename T>
struct ForwardCache {
  Mat<T> x, h1, h2, p;
};

template <typename T>
void forward(const FnnWeights<T>& w, ForwardCache<T>& c, int threads = 1) {
  size_t b = c.x.rows;
  if (c.x.cols != w.d_in) throw ShapeMismatch("forward input width");
  if (c.h1.rows != b || c.h1.cols != kHidden) c.h1 = Mat<T>(b, kHidden);
  if (c.h2.rows != b || c.h2.cols != kHidden) c.h2 = Mat<T>(b, kHidden);
  if (c.p.rows != b || c.p.cols != w.num_classes) c.p = Mat<T>(b, w.num_classes);
  gemm_nn(c.x, w.w1, c.h1, threads);
  for (size_t i = 0; i < b; ++i) {
    T* h = c.h1.row(i);
    for (size_t j = 0; j < kHidden; ++j) {
      h[j] += w.b1[j];
      if (h[j] < T(0)) h[j] = T(0);
    }
  }
  gemm_nn(c.h1, w.w2, c.h2, threads);
  for (size_t i = 0; i < b; ++i) {
    T* h = c.h2.row(i);
    for (size_t j = 0; j < kHidden; ++j) {
      h[j] += w.b2[j];
      if (h[j] < T(0)) h[j] = T(0);
    }
  }
  gemm_nn(c.h2, w.w3, c.p, threads);
  for (size_t i = 0; i < b; ++i) {
    T* z = c.p.row(i);
    T zmax = std::numeric_limits<T>::lowest();
    for (size_t j = 0; j < w.num_classes; ++j) {
      z[j] += w.b3[j];
      zmax = std::max(zmax, z[j]);
    }
    T sum = 0;
    for (size_t j = 0; j < w.num_classes; ++j) {
      z[j] = std::exp(z[j] - zmax);
      sum += z[j];
    }
    for (size_t j = 0; j < w.num_classes; ++j) z[j] /= sum;
  }
}

// Mean over the batch of w_y · (−log p_y), probabilities clamped at 1e-12.
template <typename T>
double loss_weighted_ce(const Mat<T>& p, const uint8_t* labels, const std::vector<double>& cw) {
  double total = 0;
  for (size_t i = 0; i < p.rows; ++i) {
    uint8_t y = labels[i];
    if (y >= p.cols) throw CodeOutOfRange("label code " + std::to_string(y));
    double py = std::max(double(p.row(i)[y]), 1e-12);
    double w = cw.empty() ? 1.0 : cw[y];
    total += w * -std::log(py);
  }
  return p.rows ? total / double(p.rows) : 0.0;
}

template <typename T>
struct FnnGrads {
  Mat<T> port_emb, method_emb, w1, w2, w3;
  std::vector<T> b1, b2, b3;
};

template <typename T>
FnnGrads<T> make_grads(const FnnWeights<T>& w) {
  FnnGrads<T> g;
  g.port_emb = Mat<T>(kPortVocab, kPortDim);
  g.method_emb = Mat<T>(kMethodVocabSize, kMethodDim);
  g.w1 = Mat<T>(w.d_in, kHidden);
  g.w2 = Mat<T>(kHidden, kHidden);
  g.w3 = Mat<T>(kHidden, w.num_classes);
  g.b1.assign(kHidden, T(0));
  g.b2.assign(kHidden, T(0));
  g.b3.assign(w.num_classes, T(0));
  return g;
}

// Exact gradients of loss_weighted_ce. Embedding gradients are accumulated
// only into looked-up rows; frozen embeddings leave those tables zero.
template <typename T>
void backward(const FnnWeights<T>& w, const ForwardCache<T>& c, const EncodedDataset& ds,
              const uint32_t* idx, const uint8_t* labels, const std::vector<double>& cw,
              FnnGrads<T>& g, int threads = 1) {
  size_t b = c.x.rows;
  Mat<T> dz = c.p;
  for (size_t i = 0; i < b; ++i) {
    uint8_t y = labels[i];
    T* row = dz.row(i);
    row[y] -= T(1);
    T scale = T((cw.empty() ? 1.0 : cw[y]) / double(b));
    for (size_t j = 0; j < dz.cols; ++j) row[j] *= scale;
  }

  gemm_tn(c.h2, dz, g.w3, threads);
  std::fill(g.b3.begin(), g.b3.end(), T(0));
  for (size_t i = 0; i < b; ++i)
    for (size_t j = 0; j < dz.cols; ++j) g.b3[j] += dz.row(i)[j];

  Mat<T> dh2(b, kHidden);
  gemm_nt(dz, w.w3, dh2, threads);
  for (size_t i = 0; i < b; ++i) {
    T* d = dh2.row(i);
    const T* h = c.h2.row(i);
    for (size_t j = 0; j < kHidden; ++j)
      if (h[j] <= T(0)) d[j] = T(0);
  }

  gemm_tn(c.h1, dh2, g.w2, threads);
  std::fill(g.b2.begin(), g.b2.end(), T(0));
  for (size_t i = 0; i < b; ++i)
    for (size_t j = 0; j < kHidden; ++j) g.b2[j] += dh2.row(i)[j];

  Mat<T> dh1(b, kHidden);
  gemm_nt(dh2, w.w2, dh1, threads);
  for (size_t i = 0; i < b; ++i) {
    T* d = dh1.row(i);
    const T* h = c.h1.row(i);
    for (size_t j = 0; j < kHidden; ++j)
      if (h[j] <= T(0)) d[j] = T(0);
  }

  gemm_tn(c.x, dh1, g.w1, threads);
  std::fill(g.b1.begin(), g.b1.end(), T(0));
  for (size_t i = 0; i < b; ++i)
    for (size_t j = 0; j < kHidden; ++j) g.b1[j] += dh1.row(i)[j];

  g.port_emb.zero();
  g.method_emb.zero();
  if (!w.frozen_embeddings) {
    // Only the embedding slice of dX is needed: dX_emb = dH1 · W1[emb rows]ᵀ.
    Mat<T> w1_emb(kEmbWidth, kHidden);
    for (size_t r = 0; r < kEmbWidth; ++r)
      std::copy_n(w.w1.row(w.dense_width + r), kHidden, w1_emb.row(r));
    Mat<T> dx_emb(b, kEmbWidth);
    gemm_nt(dh1, w1_emb, dx_emb, threads);
    for (size_t i = 0; i < b; ++i) {
      uint32_t r = idx[i];
      const T* d = dx_emb.row(i);
      T* sp = g.port_emb.row(ds.ports[r * 2]);
      T* dp = g.port_emb.row(ds.ports[r * 2 + 1]);
      T* mm = g.method_emb.row(ds.methods[r]);
      for (size_t j = 0; j < kPortDim; ++j) sp[j] += d[j];
      for (size_t j = 0; j < kPortDim; ++j) dp[j] += d[kPortDim + j];
      for (size_t j = 0; j < kMethodDim; ++j) mm[j] += d[2 * kPortDim + j];
    }
  }
}

template <typename T>
struct AdamState {
  uint64_t step = 0;
  FnnGrads<T> m, v;
};

template <typename T>
AdamState<T> make_adam(const FnnWeights<T>& w) {
  return AdamState<T>{0, make_grads(w), make_grads(w)};
}

template <typename T>
void adam_step(FnnWeights<T>& w, const FnnGrads<T>& g, AdamState<T>& st, double lr,
               double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-7) {
  st.step += 1;
  double bc1 = 1.0 - std::pow(beta1, double(st.step));
  double bc2 = 1.0 - std::pow(beta2, double(st.step));
  auto update = [&](std::vector<T>& p, const std::vector<T>& grad, std::vector<T>& m,
                    std::vector<T>& v) {
    for (size_t i = 0; i < p.size(); ++i) {
      T gi = grad[i];
      m[i] = T(beta1) * m[i] + T(1 - beta1) * gi;
      v[i] = T(beta2) * v[i] + T(1 - beta2) * gi * gi;
      T mhat = m[i] / T(bc1);
      T vhat = v[i] / T(bc2);
      p[i] -= T(lr) * mhat / (std::sqrt(vhat) + T(eps));
    }
  };
  if (!w.frozen_embeddings) {
    update(w.port_emb.a, g.port_emb.a, st.m.port_emb.a, st.v.port_emb.a);
    update(w.method_emb.a, g.method_emb.a, st.m.method_emb.a, st.v.method_emb.a);
  }
  update(w.w1.a, g.w1.a, st.m.w1.a, st.v.w1.a);
  update(w.b1, g.b1, st.m.b1, st.v.b1);
  update(w.w2.a, g.w2.a, st.m.w2.a, st.v.w2.a);
  update(w.b2, g.b2, st.m.b2, st.v.b2);
  update(w.w3.a, g.w3.a, st.m.w3.a, st.v.w3.a);
  update(w.b3, g.b3, st.m.b3, st.v.b3);
}

struct TrainConfig {
  double lr = 1e-4;
  size_t batch = 256;
  size_t max_epochs = 20;
  size_t patience = 5;
  uint64_t seed = 1;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-7;
  bool restore_best = true;
  int threads = 1;
};

struct TrainReport {
  std::vector<double> train_loss, train_acc, val_loss, val_acc;
  size_t stopped_epoch = 0;
  size_t best_epoch = 0;
  double wall_seconds = 0;
};

// Validation pass: unweighted cross-entropy plus accuracy.
template <typename T>
std::pair<double, double> evaluate_loss_acc(const FnnWeights<T>& w, const EncodedDataset& ds,
                                            const std::vector<uint32_t>& idx,
                                            const std::vector<uint8_t>& labels, size_t batch,
                                            int threads = 1) {
  ForwardCache<T> cache;
  double total = 0;
  size_t correct = 0;
  for (size_t off = 0; off < idx.size(); off += batch) {
    size_t b = std::min(batch, idx.size() - off);
    gather_inputs(ds, w, idx.data() + off, b, cache.x);
    forward(w, cache, threads);
    for (size_t i = 0; i < b; ++i) {
      uint8_t y = labels[idx[off + i]];
      const T* p = cache.p.row(i);
      total += -std::log(std::max(double(p[y]), 1e-12));
      size_t arg = 0;
      for (size_t j = 1; j < w.num_classes; ++j)
        if (p[j] > p[arg]) arg = j;
      if (arg == y) ++correct;
    }
  }
  size_t n = idx.size();
  return {n ? total / double(n) : 0.0, n ? double(correct) / double(n) : 0.0};
}

template <typename T>
std::vector<uint8_t> predict(const FnnWeights<T>& w, const EncodedDataset& ds,
                             const std::vector<uint32_t>& idx, size_t batch = 1024,
                             int threads = 1) {
  ForwardCache<T> cache;
  std::vector<uint8_t> out;
  out.reserve(idx.size());
  for (size_t off = 0; off < idx.size(); off += batch) {
    size_t b = std::min(batch, idx.size() - off);
    gather_inputs(ds, w, idx.data() + off, b, cache.x);
    forward(w, cache, threads);
    for (size_t i = 0; i < b; ++i) {
      const T* p = cache.p.row(i);
      size_t arg = 0;
      for (size_t j = 1; j < w.num_classes; ++j)
        if (p[j] > p[arg]) arg = j;  // ties stay at the lower code
      out.push_back(uint8_t(arg));
    }
  }
  return out;
}

template <typename T>
TrainReport fit(FnnWeights<T>& w, const EncodedDataset& ds, const std::vector<uint32_t>& train_idx,
                const std::vector<uint32_t>& val_idx, const std::vector<uint8_t>& labels,
                const std::vector<double>& cw, const TrainConfig& cfg) {
  auto t0 = std::chrono::steady_clock::now();
  TrainReport report;
  AdamState<T> adam = make_adam(w);
  FnnGrads<T> grads = make_grads(w);
  ForwardCache<T> cache;
  std::vector<uint32_t> order(train_idx);
  std::vector<uint8_t> batch_labels;
  FnnWeights<T> best;
  double best_loss = std::numeric_limits<double>::infinity();
  size_t bad_epochs = 0;

  for (size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng rng(cfg.seed + epoch);
    rng.shuffle(order);
    double epoch_loss = 0;
    size_t batches = 0, correct = 0;
    for (size_t off = 0; off < order.size(); off += cfg.batch) {
      size_t b = std::min(cfg.batch, order.size() - off);
      gather_inputs(ds, w, order.data() + off, b, cache.x);
      forward(w, cache, cfg.threads);
      batch_labels.resize(b);
      for (size_t i = 0; i < b; ++i) batch_labels[i] = labels[order[off + i]];
      double loss = loss_weighted_ce(cache.p, batch_labels.data(), cw);
      if (!std::isfinite(loss))
        throw NonFiniteLoss("epoch " + std::to_string(epoch) + " batch " +
                            std::to_string(batches) + ": loss " + std::to_string(loss));
      epoch_loss += loss;
      ++batches;
      for (size_t i = 0; i < b; ++i) {
        const T* p = cache.p.row(i);
        size_t arg = 0;
        for (size_t j = 1; j < w.num_classes; ++j)
          if (p[j] > p[arg]) arg = j;
        if (arg == batch_labels[i]) ++correct;
      }
      backward(w, cache, ds, order.data() + off, batch_labels.data(), cw, grads, cfg.threads);
      adam_step(w, grads, adam, cfg.lr, cfg.beta1, cfg.beta2, cfg.eps);
    }
    report.train_loss.push_back(batches ? epoch_loss / double(batches) : 0.0);
    report.train_acc.push_back(order.empty() ? 0.0 : double(correct) / double(order.size()));

    auto [vloss, vacc] =
        evaluate_loss_acc(w, ds, val_idx, labels, cfg.batch, cfg.threads);
    if (!std::isfinite(vloss))
      throw NonFiniteLoss("epoch " + std::to_string(epoch) + ": validation loss not finite");
    report.val_loss.push_back(vloss);
    report.val_acc.push_back(vacc);
    report.stopped_epoch = epoch;

    if (vloss < best_loss) {
      best_loss = vloss;
      report.best_epoch = epoch;
      bad_epochs = 0;
      if (cfg.restore_best) best = w;
    } else if (++bad_epochs >= cfg.patience) {
      break;
    }
  }
  if (cfg.restore_best && report.best_epoch > 0) w = best;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return report;
}

// The binary model reuses the multi-class embedding tables as fixed encoders
// and trains a fresh 2-way dense stack on top.
template <typename T>
FnnWeights<T> build_bfnn(const FnnWeights<T>& mfnn, uint64_t seed) {
  FnnWeights<T> w = init_fnn<T>(2, mfnn.dense_width, seed);
  w.port_emb = mfnn.port_emb;
  w.method_emb = mfnn.method_emb;
  w.frozen_embeddings = true;
  return w;
}

inline void save_weights(const FnnWeights<float>& w, const std::string& path) {
  std::string out;
  out += "netids-fnn 1\n";
  out += "classes " + std::to_string(w.num_classes) + '\n';
  out += "dense_width " + std::to_string(w.dense_width) + '\n';
  out += "d_in " + std::to_string(w.d_in) + '\n';
  out += std::string("frozen ") + (w.frozen_embeddings ? "1" : "0") + '\n';
  out += "scalar f32\n";
  out += "end\n";
  auto dump_mat = [&out](const Mat<float>& m) {
    for (float f : m.a) put_u32le(out, std::bit_cast<uint32_t>(f));
  };
  auto dump_vec = [&out](const std::vector<float>& v) {
    for (float f : v) put_u32le(out, std::bit_cast<uint32_t>(f));
  };
  dump_mat(w.port_emb);
  dump_mat(w.method_emb);
  dump_mat(w.w1);
  dump_vec(w.b1);
  dump_mat(w.w2);
  dump_vec(w.b2);
  dump_mat(w.w3);
  dump_vec(w.b3);
  put_u32le(out, crc32(out));
  write_file(path, out);
}

inline FnnWeights<float> load_weights(const std::string& path, size_t expect_classes = 0) {
  std::string raw = read_file(path);
  if (raw.size() < 4) throw SchemaMismatch(path + ": too short");
  uint32_t stored = get_u32le(reinterpret_cast<const unsigned char*>(raw.data()) + raw.size() - 4);
  std::string body = raw.substr(0, raw.size() - 4);
  if (crc32(body) != stored) throw ChecksumMismatch(path + ": weight file crc mismatch");

  size_t pos = 0;
  auto next_line = [&]() {
    size_t nl = body.find('\n', pos);
    if (nl == std::string::npos) throw SchemaMismatch(path + ": truncated header");
    std::string line = body.substr(pos, nl - pos);
    pos = nl + 1;
    return line;
  };
  if (next_line() != "netids-fnn 1") throw SchemaMismatch(path + ": not a weights file");
  size_t classes = 0, dense_width = 0, d_in = 0;
  bool frozen = false;
  for (std::string line = next_line(); line != "end"; line = next_line()) {
    auto parts = split(line, ' ');
    if (parts.size() != 2) throw SchemaMismatch(path + ": bad header line: " + line);
    if (parts[0] == "classes")
      classes = size_t(*parse_int(parts[1]));
    else if (parts[0] == "dense_width")
      dense_width = size_t(*parse_int(parts[1]));
    else if (parts[0] == "d_in")
      d_in = size_t(*parse_int(parts[1]));
    else if (parts[0] == "frozen")
      frozen = parts[1] == "1";
    else if (parts[0] == "scalar" && parts[1] != "f32")
      throw SchemaMismatch(path + ": unsupported scalar type");
  }
  if (classes == 0 || d_in != dense_width + kEmbWidth)
    throw SchemaMismatch(path + ": inconsistent header");
  if (expect_classes && classes != expect_classes)
    throw ArchMismatch(path + ": model has " + std::to_string(classes) + " classes, expected " +
                       std::to_string(expect_classes));

  FnnWeights<float> w;
  w.num_classes = classes;
  w.dense_width = dense_width;
  w.d_in = d_in;
  w.frozen_embeddings = frozen;
  w.port_emb = Mat<float>(kPortVocab, kPortDim);
  w.method_emb = Mat<float>(kMethodVocabSize, kMethodDim);
  w.w1 = Mat<float>(d_in, kHidden);
  w.w2 = Mat<float>(kHidden, kHidden);
  w.w3 = Mat<float>(kHidden, classes);
  w.b1.resize(kHidden);
  w.b2.resize(kHidden);
  w.b3.resize(classes);
  size_t need = (w.port_emb.a.size() + w.method_emb.a.size() + w.w1.a.size() + w.b1.size() +
                 w.w2.a.size() + w.b2.size() + w.w3.a.size() + w.b3.size()) *
                4;
  if (body.size() - pos != need) throw SchemaMismatch(path + ": payload size mismatch");
  const unsigned char* p = reinterpret_cast<const unsigned char*>(body.data()) + pos;
  auto take_into = [&p](float* dst, size_t count) {
    for (size_t i = 0; i < count; ++i, p += 4) dst[i] = std::bit_cast<float>(get_u32le(p));
  };
  take_into(w.port_emb.a.data(), w.port_emb.a.size());
  take_into(w.method_emb.a.data(), w.method_emb.a.size());
  take_into(w.w1.a.data(), w.w1.a.size());
  take_into(w.b1.data(), w.b1.size());
  take_into(w.w2.a.data(), w.w2.a.size());
  take_into(w.b2.data(), w.b2.size());
  take_into(w.w3.a.data(), w.w3.a.size());
  take_into(w.b3.data(), w.b3.size());
  return w;
}

}  // namespace netids
