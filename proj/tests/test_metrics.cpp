#include <catch2/catch_amalgamated.hpp>

#include "netids/metrics.hpp"

using namespace netids;

TEST_CASE("ratios reduce and compare exactly", "[metrics]") {
  auto r = Ratio::make(6, 8);
  CHECK(r.num == 3);
  CHECK(r.den == 4);
  CHECK(r == Ratio::make(3, 4));
  CHECK(r.value() == 0.75);
  auto z = Ratio::make(0, 5);
  CHECK(z.num == 0);
  CHECK(z.value() == 0.0);
  auto u = Ratio::make(1, 0);
  CHECK(u.undefined());
}

TEST_CASE("confusion matrix is actual by predicted", "[metrics]") {
  std::vector<uint8_t> actual{0, 0, 1, 1, 2, 2, 2};
  std::vector<uint8_t> predicted{0, 1, 1, 1, 2, 0, 2};
  auto cm = confusion(actual, predicted, 3);
  CHECK(cm.at(0, 0) == 1);
  CHECK(cm.at(0, 1) == 1);
  CHECK(cm.at(1, 1) == 2);
  CHECK(cm.at(2, 0) == 1);
  CHECK(cm.at(2, 2) == 2);
  CHECK(cm.total() == 7);
  CHECK(cm.trace() == 5);
  CHECK_THROWS_AS(confusion({0}, {0, 1}, 2), ShapeMismatch);
  CHECK_THROWS_AS(confusion({5}, {0}, 2), CodeOutOfRange);
}

TEST_CASE("per class metrics come from one vs rest counts", "[metrics]") {
  // Hand-tallied example: class 1 has TP=2 FP=1 FN=0 TN=4.
  std::vector<uint8_t> actual{0, 0, 1, 1, 2, 2, 2};
  std::vector<uint8_t> predicted{0, 1, 1, 1, 2, 0, 2};
  auto cm = confusion(actual, predicted, 3);
  auto c1 = one_vs_rest(cm, 1);
  CHECK(c1.tp == 2);
  CHECK(c1.fp == 1);
  CHECK(c1.fn == 0);
  CHECK(c1.tn == 4);
  CHECK(c1.accuracy == Ratio::make(6, 7));
  CHECK(c1.precision == Ratio::make(2, 3));
  CHECK(c1.recall == Ratio::make(1, 1));
  CHECK(c1.f1 == Ratio::make(4, 5));  // 2·2/(2·2+1+0)
  CHECK_FALSE(c1.precision_undefined);

  // A class that never appears and is never predicted: precision, recall and
  // F1 all hit zero denominators and flag as undefined, rendering as zero.
  auto empty = one_vs_rest(confusion({0, 0}, {0, 0}, 2), 1);
  CHECK(empty.precision_undefined);
  CHECK(empty.recall_undefined);
  CHECK(empty.f1_undefined);
  CHECK(empty.precision.value() == 0.0);
}

TEST_CASE("report renders aligned percent columns", "[metrics]") {
  std::vector<uint8_t> actual{0, 0, 1, 1};
  std::vector<uint8_t> predicted{0, 0, 1, 0};
  auto report = evaluate_codes(actual, predicted, 2, {"normal", "attack"});
  CHECK(report.overall_accuracy == Ratio::make(3, 4));
  auto text = render_report(report);
  CHECK(text.find("normal") != std::string::npos);
  CHECK(text.find("attack") != std::string::npos);
  CHECK(text.find("75.000%") != std::string::npos);

  auto j = report_to_json(report);
  CHECK(j["overall_accuracy"] == 0.75);
  CHECK(j["classes"].size() == 2);
  CHECK(j["per_class"][0]["tp"] == 2);
  CHECK(j["confusion"][1][0] == 1);
}

TEST_CASE("percent rendering keeps three decimals", "[metrics]") {
  CHECK(format_percent(Ratio::make(1, 1)) == "100.000");
  // One error in 547609 rounds up to 100.000 even though it is not perfect;
  // the rational form keeps the distinction.
  CHECK(format_percent(Ratio::make(547608, 547609)) == "100.000");
  CHECK(format_percent(Ratio::make(38883, 38884)) == "99.997");
  CHECK(format_percent(Ratio::make(0, 0)) == "0.000");
  CHECK(format_percent(Ratio::make(1, 3)) == "33.333");
}

TEST_CASE("near perfect splits keep exact rational form", "[metrics]") {
  // One error in 547609 rows: exactly representable as a ratio, and distinct
  // from a clean 100%.
  auto acc = Ratio::make(547608, 547609);
  CHECK(acc.num == 547608);
  CHECK(acc.den == 547609);
  CHECK(acc != Ratio::make(1, 1));
  CHECK(acc.value() < 1.0);
  auto prec = Ratio::make(38883, 38884);
  CHECK(prec.num == 38883);
  CHECK(prec != Ratio::make(1, 1));
}
