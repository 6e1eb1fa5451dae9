#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>

#include "netids/rng.hpp"
#include "netids/svm.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace netids;

namespace {

// Four well-separated point clouds in two dimensions, padded to look like an
// encoded matrix.
std::pair<Mat<float>, std::vector<uint8_t>> blobs(size_t per_class, uint64_t seed) {
  static constexpr double cx[4] = {2, -2, 2, -2};
  static constexpr double cy[4] = {2, 2, -2, -2};
  Mat<float> x(per_class * 4, 2);
  std::vector<uint8_t> y;
  Rng rng(seed);
  for (size_t c = 0; c < 4; ++c)
    for (size_t i = 0; i < per_class; ++i) {
      size_t r = c * per_class + i;
      x.row(r)[0] = float(cx[c] + rng.uniform(-0.4, 0.4));
      x.row(r)[1] = float(cy[c] + rng.uniform(-0.4, 0.4));
      y.push_back(uint8_t(c));
    }
  return {std::move(x), std::move(y)};
}

}  // namespace

TEST_CASE("port bucketing keeps common ports and ranges the rest", "[svm]") {
  CHECK(bucket_ports(80).token == "80");
  CHECK(bucket_ports(53).token == "53");
  CHECK(bucket_ports(1000).token == "other");
  CHECK(bucket_ports(1000).bucket_low == 1);
  CHECK(bucket_ports(1000).bucket_high == 0);
  CHECK(bucket_ports(40000).bucket_low == 0);
  CHECK(bucket_ports(40000).bucket_high == 1);
  CHECK(bucket_ports(65536).bucket_high == 1);  // the missing-port code

  CHECK(collapse_methods("GET") == "GET");
  CHECK(collapse_methods("GET,GET") == "MULTIPLE");
  CHECK(collapse_methods("BREW") == "0");
  CHECK(collapse_methods("0") == "0");
}

TEST_CASE("solver reaches the lattice optimum on a one dimensional task", "[svm]") {
  // t = +1 at x=+1, −1 at x=−1, ten each; optimum is near w=1, b=0.
  Mat<float> x(20, 1);
  std::vector<uint8_t> y(20);
  for (size_t i = 0; i < 20; ++i) {
    bool pos = i < 10;
    x.row(i)[0] = pos ? 1.0f : -1.0f;
    y[i] = pos ? 1 : 0;
  }
  std::vector<double> cw = {1.0, 1.0};
  double C = 1.0;
  auto model = fit_linear_svc(x, y, 2, C, cw, 2000, 3);
  CHECK(model.converged);

  std::vector<int8_t> t(20);
  std::vector<double> sw(20, 1.0);
  double sum_w = 20.0;
  for (size_t i = 0; i < 20; ++i) t[i] = y[i] == 1 ? 1 : -1;
  double lambda = 1.0 / (C * sum_w);
  std::vector<double> w1{model.w.row(1)[0]};
  double solver_obj = detail::svc_objective(x, t, sw, sum_w, lambda, w1, model.b[1]);
  double lattice = oracles::lattice_min_objective(x, t, sw, sum_w, lambda, -3, 3, 0.01);
  CHECK(solver_obj <= lattice + 5e-3);

  auto preds = predict_svm(model, x);
  CHECK(preds == y);
}

TEST_CASE("solver separates four blobs and is deterministic", "[svm]") {
  auto [x, y] = blobs(40, 7);
  std::vector<double> cw = {1.0, 1.0, 1.0, 1.0};
  auto model = fit_linear_svc(x, y, 4, 10.0, cw, 3000, 5);
  auto preds = predict_svm(model, x);
  size_t correct = 0;
  for (size_t i = 0; i < preds.size(); ++i) correct += preds[i] == y[i];
  CHECK(correct == y.size());

  auto model2 = fit_linear_svc(x, y, 4, 10.0, cw, 3000, 5);
  CHECK(model2.w.a == model.w.a);
  CHECK(model2.b == model.b);
  CHECK(model2.epochs_used == model.epochs_used);

  CHECK_THROWS_AS(fit_linear_svc(x, y, 4, 0.0, cw, 100, 5), DataError);
}

TEST_CASE("stratified folds cover every row and balance classes", "[svm]") {
  std::vector<uint8_t> y;
  for (int i = 0; i < 50; ++i) y.push_back(0);
  for (int i = 0; i < 30; ++i) y.push_back(1);
  for (int i = 0; i < 20; ++i) y.push_back(2);
  auto fold = stratified_folds(y, 3, 5, 11);
  REQUIRE(fold.size() == y.size());
  std::map<int, std::map<uint8_t, int>> per_fold;
  for (size_t i = 0; i < y.size(); ++i) {
    CHECK(fold[i] >= 0);
    CHECK(fold[i] < 5);
    per_fold[fold[i]][y[i]]++;
  }
  REQUIRE(per_fold.size() == 5);
  for (auto& [f, counts] : per_fold) {
    CHECK(counts[0] == 10);
    CHECK(counts[1] == 6);
    CHECK(counts[2] == 4);
  }
  std::vector<uint8_t> tiny = {0, 0, 0, 1};
  CHECK_THROWS_AS(stratified_folds(tiny, 2, 5, 1), TooFewRows);
}

TEST_CASE("grid search prefers the best C and breaks ties downward", "[svm]") {
  auto [x, y] = blobs(25, 13);
  auto result = grid_search_cv(x, y, 4, {0.01, 1.0, 100.0}, 3, 17, 400);
  REQUIRE(result.accuracy_by_c.size() == 3);
  double best_acc = -1;
  for (auto& [c, acc] : result.accuracy_by_c) best_acc = std::max(best_acc, acc);
  // The winner carries the best mean accuracy, and equal scores keep the
  // smallest C because later candidates must strictly improve.
  bool found = false;
  for (auto& [c, acc] : result.accuracy_by_c)
    if (acc == best_acc && !found) {
      CHECK(result.best_c == c);
      found = true;
    }
  CHECK(best_acc > 0.9);
}

TEST_CASE("stratified subsampling preserves proportions", "[svm]") {
  std::vector<uint8_t> y;
  for (int i = 0; i < 600; ++i) y.push_back(0);
  for (int i = 0; i < 300; ++i) y.push_back(1);
  for (int i = 0; i < 100; ++i) y.push_back(2);
  auto idx = stratified_subsample_indices(y, 3, 100, 3);
  REQUIRE(idx.size() == 100);
  CHECK(std::is_sorted(idx.begin(), idx.end()));
  std::set<uint32_t> uniq(idx.begin(), idx.end());
  CHECK(uniq.size() == idx.size());
  std::array<int, 3> counts{};
  for (uint32_t i : idx) counts[y[i]]++;
  CHECK(std::abs(counts[0] - 60) <= 1);
  CHECK(std::abs(counts[1] - 30) <= 1);
  CHECK(std::abs(counts[2] - 10) <= 1);
  CHECK_THROWS_AS(stratified_subsample_indices(y, 3, 5000, 3), TooFewRows);
}

TEST_CASE("svm models survive a disk round trip", "[svm]") {
  testsupport::TempDir dir("svm");
  auto [x, y] = blobs(10, 3);
  std::vector<double> cw(4, 1.0);
  auto model = fit_linear_svc(x, y, 4, 1.0, cw, 200, 1);
  save_svm(model, dir.file("m.bin"));
  auto back = load_svm(dir.file("m.bin"));
  CHECK(back.num_classes == model.num_classes);
  CHECK(back.w.a == model.w.a);
  CHECK(back.b == model.b);
  CHECK(back.C == model.C);
  CHECK(back.converged == model.converged);

  std::string bytes = read_file(dir.file("m.bin"));
  bytes[bytes.size() - 9] ^= 0x01;
  write_file(dir.file("bad.bin"), bytes);
  CHECK_THROWS_AS(load_svm(dir.file("bad.bin")), ChecksumMismatch);
}
