#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "netids/neuralnet.hpp"
#include "netids/rng.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace netids;

namespace {

// Random dataset over a handful of ports; labels optionally follow the source
// port so that training has something learnable.
EncodedDataset synth_dataset(size_t rows, size_t dense_width, size_t k, uint64_t seed,
                             bool port_rule) {
  static constexpr std::array<uint32_t, 6> kPorts = {80, 443, 1883, 4444, 53, 65536};
  EncodedDataset ds;
  ds.rows = rows;
  ds.dense_width = dense_width;
  Rng rng(seed);
  ds.dense.resize(rows * dense_width);
  for (auto& v : ds.dense) v = float(rng.uniform(-1.0, 1.0));
  for (size_t i = 0; i < rows; ++i) {
    size_t src = rng.below(kPorts.size());
    ds.ports.push_back(kPorts[src]);
    ds.ports.push_back(kPorts[rng.below(kPorts.size())]);
    ds.methods.push_back(uint32_t(rng.below(kMethodVocabSize)));
    uint8_t label = port_rule ? uint8_t(src % k) : uint8_t(rng.below(k));
    ds.labels_mc.push_back(label);
    ds.labels_bin.push_back(label == 0 ? 0 : 1);
    ds.subcat.push_back(label == 0 ? 10 : uint8_t(label - 1));
  }
  return ds;
}

std::vector<uint32_t> iota_idx(size_t n) {
  std::vector<uint32_t> idx(n);
  for (size_t i = 0; i < n; ++i) idx[i] = uint32_t(i);
  return idx;
}

double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-4});
}

}  // namespace

TEST_CASE("forward pass matches the scalar reference", "[neuralnet]") {
  auto ds = synth_dataset(24, 6, 4, 11, false);
  auto w = init_fnn<double>(4, ds.dense_width, 5);
  auto idx = iota_idx(ds.rows);
  ForwardCache<double> cache;
  gather_inputs(ds, w, idx.data(), idx.size(), cache.x);
  forward(w, cache);
  for (size_t i = 0; i < ds.rows; ++i) {
    auto ref = oracles::naive_forward_row(w, ds, uint32_t(i));
    double sum = 0;
    for (size_t j = 0; j < 4; ++j) {
      CHECK(rel_err(double(cache.p.row(i)[j]), ref[j]) <= 1e-6);
      sum += double(cache.p.row(i)[j]);
    }
    CHECK(sum == Catch::Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("analytic gradients match central differences", "[neuralnet]") {
  for (uint64_t seed : {1ull, 2ull, 3ull}) {
    auto ds = synth_dataset(8, 5, 3, seed * 100 + 7, false);
    auto w = init_fnn<double>(3, ds.dense_width, seed);
    auto idx = iota_idx(ds.rows);
    std::vector<double> cw = {1.0, 2.5, 0.5};

    ForwardCache<double> cache;
    gather_inputs(ds, w, idx.data(), idx.size(), cache.x);
    forward(w, cache);
    std::vector<uint8_t> labels;
    for (uint32_t i : idx) labels.push_back(ds.labels_mc[i]);
    auto grads = make_grads(w);
    backward(w, cache, ds, idx.data(), labels.data(), cw, grads);

    Rng pick(seed + 99);
    auto check_tensor = [&](std::vector<double>& params, const std::vector<double>& analytic,
                            size_t samples) {
      for (size_t s = 0; s < samples; ++s) {
        size_t i = size_t(pick.below(params.size()));
        double an = analytic[i];
        // Retry at smaller h when a ReLU kink sits inside the stencil; the
        // finite-difference error shrinks with h while a real gradient bug
        // stays put.
        bool ok = false;
        for (double h : {1e-3, 1e-5}) {
          double fd = oracles::fd_gradient(w, &params[i], ds, idx, ds.labels_mc, cw, h);
          if (rel_err(an, fd) <= 1e-3) {
            ok = true;
            break;
          }
        }
        CHECK(ok);
      }
    };
    check_tensor(w.w1.a, grads.w1.a, 12);
    check_tensor(w.w2.a, grads.w2.a, 12);
    check_tensor(w.w3.a, grads.w3.a, 12);
    check_tensor(w.b1, grads.b1, 8);
    check_tensor(w.b2, grads.b2, 8);
    check_tensor(w.b3, grads.b3, 3);

    // Embedding rows that the batch looked up get checked; untouched rows
    // must have exactly zero gradient.
    for (size_t i = 0; i < 4; ++i) {
      uint32_t port = ds.ports[i * 2];
      size_t off = port * kPortDim + pick.below(kPortDim);
      bool ok = false;
      for (double h : {1e-3, 1e-5}) {
        double fd = oracles::fd_gradient(w, &w.port_emb.a[off], ds, idx, ds.labels_mc, cw, h);
        if (rel_err(grads.port_emb.a[off], fd) <= 1e-3) {
          ok = true;
          break;
        }
      }
      CHECK(ok);
      uint32_t method = ds.methods[i];
      size_t moff = method * kMethodDim + pick.below(kMethodDim);
      bool mok = false;
      for (double h : {1e-3, 1e-5, 1e-6}) {
        double fd = oracles::fd_gradient(w, &w.method_emb.a[moff], ds, idx, ds.labels_mc, cw, h);
        if (rel_err(grads.method_emb.a[moff], fd) <= 1e-3) {
          mok = true;
          break;
        }
      }
      CHECK(mok);
    }
    std::set<uint32_t> used_ports(ds.ports.begin(), ds.ports.end());
    uint32_t untouched = 12345;
    REQUIRE(used_ports.count(untouched) == 0);
    for (size_t j = 0; j < kPortDim; ++j)
      CHECK(grads.port_emb.row(untouched)[j] == 0.0);
  }
}

TEST_CASE("frozen embeddings receive no gradient and no update", "[neuralnet]") {
  auto ds = synth_dataset(16, 5, 2, 3, true);
  auto mfnn = init_fnn<double>(4, ds.dense_width, 21);
  auto w = build_bfnn(mfnn, 22);
  REQUIRE(w.frozen_embeddings);
  REQUIRE(w.num_classes == 2);
  CHECK(w.port_emb.a == mfnn.port_emb.a);
  CHECK(w.method_emb.a == mfnn.method_emb.a);

  auto idx = iota_idx(ds.rows);
  ForwardCache<double> cache;
  gather_inputs(ds, w, idx.data(), idx.size(), cache.x);
  forward(w, cache);
  std::vector<uint8_t> labels;
  for (uint32_t i : idx) labels.push_back(ds.labels_bin[i]);
  auto grads = make_grads(w);
  std::vector<double> cw = {1.0, 1.0};
  backward(w, cache, ds, idx.data(), labels.data(), cw, grads);
  for (double g : grads.port_emb.a) CHECK(g == 0.0);
  for (double g : grads.method_emb.a) CHECK(g == 0.0);

  auto adam = make_adam(w);
  auto before = w.port_emb.a;
  adam_step(w, grads, adam, 0.1);
  CHECK(w.port_emb.a == before);
}

TEST_CASE("weighted cross entropy matches a hand computation", "[neuralnet]") {
  Mat<double> p(2, 3);
  p.row(0)[0] = 0.7;
  p.row(0)[1] = 0.2;
  p.row(0)[2] = 0.1;
  p.row(1)[0] = 0.0;  // clamps at 1e-12
  p.row(1)[1] = 0.5;
  p.row(1)[2] = 0.5;
  uint8_t labels[2] = {1, 0};
  std::vector<double> cw = {2.0, 3.0, 1.0};
  double expect = (3.0 * -std::log(0.2) + 2.0 * -std::log(1e-12)) / 2.0;
  CHECK(loss_weighted_ce(p, labels, cw) == Catch::Approx(expect).epsilon(1e-12));
}

TEST_CASE("adam follows the update rule exactly", "[neuralnet]") {
  auto w = init_fnn<double>(2, 3, 1);
  auto g = make_grads(w);
  auto adam = make_adam(w);
  double g0 = 0.04, lr = 0.01, b1 = 0.9, b2 = 0.999, eps = 1e-7;
  g.w3.a[0] = g0;
  double p0 = w.w3.a[0];
  adam_step(w, g, adam, lr, b1, b2, eps);
  // First step: mhat = g, vhat = g², so the move is lr·g/(|g|+eps).
  double expect1 = p0 - lr * g0 / (std::abs(g0) + eps);
  CHECK(w.w3.a[0] == Catch::Approx(expect1).epsilon(1e-12));

  double g1 = -0.02;
  g.w3.a[0] = g1;
  adam_step(w, g, adam, lr, b1, b2, eps);
  double m = b1 * (1 - b1) * g0 + (1 - b1) * g1;
  double v = b2 * (1 - b2) * g0 * g0 + (1 - b2) * g1 * g1;
  double mhat = m / (1 - b1 * b1);
  double vhat = v / (1 - b2 * b2);
  double expect2 = expect1 - lr * mhat / (std::sqrt(vhat) + eps);
  CHECK(w.w3.a[0] == Catch::Approx(expect2).epsilon(1e-12));

  // A parameter with zero gradient on both steps does not move.
  CHECK(w.w2.a[0] == init_fnn<double>(2, 3, 1).w2.a[0]);
}

TEST_CASE("training separates a port rule and is deterministic", "[neuralnet]") {
  auto ds = synth_dataset(240, 4, 3, 77, true);
  std::vector<uint32_t> train_idx, val_idx;
  for (uint32_t i = 0; i < ds.rows; ++i) (i % 5 == 4 ? val_idx : train_idx).push_back(i);
  std::vector<double> cw = {1.0, 1.0, 1.0};

  TrainConfig cfg;
  cfg.lr = 3e-3;
  cfg.batch = 32;
  cfg.max_epochs = 25;
  cfg.patience = 25;
  cfg.seed = 5;

  auto w = init_fnn<float>(3, ds.dense_width, cfg.seed);
  auto report = fit(w, ds, train_idx, val_idx, ds.labels_mc, cw, cfg);
  REQUIRE(report.stopped_epoch >= 1);
  CHECK(report.train_loss.size() == report.stopped_epoch);
  CHECK(report.val_loss.size() == report.stopped_epoch);
  CHECK(report.best_epoch >= 1);
  CHECK(report.best_epoch <= report.stopped_epoch);
  auto [vloss, vacc] = evaluate_loss_acc(w, ds, val_idx, ds.labels_mc, cfg.batch);
  CHECK(vacc == 1.0);

  // Restored weights reproduce the best recorded validation loss.
  double best = *std::min_element(report.val_loss.begin(), report.val_loss.end());
  CHECK(vloss == Catch::Approx(best).epsilon(1e-9));

  auto w2 = init_fnn<float>(3, ds.dense_width, cfg.seed);
  auto report2 = fit(w2, ds, train_idx, val_idx, ds.labels_mc, cw, cfg);
  CHECK(report2.stopped_epoch == report.stopped_epoch);
  CHECK(w2.w3.a == w.w3.a);
  CHECK(w2.port_emb.a == w.port_emb.a);

  auto preds = predict(w, ds, val_idx);
  REQUIRE(preds.size() == val_idx.size());
  size_t correct = 0;
  for (size_t i = 0; i < preds.size(); ++i) correct += preds[i] == ds.labels_mc[val_idx[i]];
  CHECK(double(correct) == double(val_idx.size()) * vacc);
}

TEST_CASE("early stopping halts on a plateau and restores the best epoch", "[neuralnet]") {
  auto ds = synth_dataset(150, 4, 3, 31, false);  // random labels: nothing to learn
  std::vector<uint32_t> train_idx, val_idx;
  for (uint32_t i = 0; i < ds.rows; ++i) (i % 5 == 4 ? val_idx : train_idx).push_back(i);
  std::vector<double> cw = {1.0, 1.0, 1.0};
  TrainConfig cfg;
  cfg.lr = 5e-3;
  cfg.batch = 32;
  cfg.max_epochs = 60;
  cfg.patience = 3;
  cfg.seed = 9;
  auto w = init_fnn<float>(3, ds.dense_width, cfg.seed);
  auto report = fit(w, ds, train_idx, val_idx, ds.labels_mc, cw, cfg);
  CHECK(report.stopped_epoch < cfg.max_epochs);
  auto [vloss, vacc] = evaluate_loss_acc(w, ds, val_idx, ds.labels_mc, cfg.batch);
  double best = *std::min_element(report.val_loss.begin(), report.val_loss.end());
  CHECK(vloss == Catch::Approx(best).epsilon(1e-9));
  CHECK(report.val_loss[report.best_epoch - 1] == Catch::Approx(best).epsilon(1e-12));
}

TEST_CASE("weights survive a disk round trip", "[neuralnet]") {
  testsupport::TempDir dir("weights");
  auto w = init_fnn<float>(4, 7, 123);
  w.frozen_embeddings = true;
  save_weights(w, dir.file("w.bin"));
  auto back = load_weights(dir.file("w.bin"), 4);
  CHECK(back.num_classes == 4);
  CHECK(back.dense_width == 7);
  CHECK(back.d_in == w.d_in);
  CHECK(back.frozen_embeddings);
  CHECK(back.port_emb.a == w.port_emb.a);
  CHECK(back.method_emb.a == w.method_emb.a);
  CHECK(back.w1.a == w.w1.a);
  CHECK(back.w2.a == w.w2.a);
  CHECK(back.w3.a == w.w3.a);
  CHECK(back.b1 == w.b1);
  CHECK(back.b2 == w.b2);
  CHECK(back.b3 == w.b3);

  CHECK_THROWS_AS(load_weights(dir.file("w.bin"), 2), ArchMismatch);

  std::string bytes = read_file(dir.file("w.bin"));
  bytes[bytes.size() / 2] ^= 0x40;
  write_file(dir.file("bad.bin"), bytes);
  CHECK_THROWS_AS(load_weights(dir.file("bad.bin")), ChecksumMismatch);

  write_file(dir.file("junk.bin"), "not a weights file");
  CHECK_THROWS_AS(load_weights(dir.file("junk.bin")), DataError);
}

TEST_CASE("embedding codes outside the tables are rejected", "[neuralnet]") {
  auto ds = synth_dataset(4, 3, 2, 1, false);
  ds.ports[0] = 70000;
  auto w = init_fnn<float>(2, 3, 1);
  auto idx = iota_idx(4);
  ForwardCache<float> cache;
  CHECK_THROWS_AS(gather_inputs(ds, w, idx.data(), idx.size(), cache.x), CodeOutOfRange);
}
