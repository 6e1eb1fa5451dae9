#pragma once

#include <CLI11.hpp>

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "netids/capture.hpp"
#include "netids/common.hpp"
#include "netids/dataset.hpp"
#include "netids/labeling.hpp"
#include "netids/metrics.hpp"
#include "netids/neuralnet.hpp"
#include "netids/pipeline.hpp"
#include "netids/svm.hpp"
#include "netids/trafficgen.hpp"
#include "netids/types.hpp"

namespace netids::cli {

namespace detail {

inline std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

inline Subcategory parse_attack_subcategory(const std::string& name) {
  auto sub = subcategory_from_name(name);
  if (!sub || *sub == Subcategory::normal)
    throw CLI::ValidationError("--subcategory", "unknown attack subcategory '" + name + "'");
  return *sub;
}

inline std::vector<uint8_t> multiclass_labels(const IntermediateTable& t) {
  std::vector<uint8_t> labels(t.size());
  for (size_t i = 0; i < t.size(); ++i) labels[i] = class_code_of(t.category[i]);
  return labels;
}

inline std::vector<uint32_t> filter_to_binary_task(const std::vector<uint32_t>& idx,
                                                   const EncodedDataset& ds, Subcategory sub) {
  std::vector<uint32_t> out;
  for (uint32_t i : idx)
    if (ds.subcat[i] == uint8_t(sub) || ds.subcat[i] == uint8_t(Subcategory::normal))
      out.push_back(i);
  return out;
}

inline std::vector<uint32_t> split_by_name(const DatasetBundle& bundle, const std::string& name) {
  if (name == "train") return bundle.splits.train;
  if (name == "validation") return bundle.splits.validation;
  if (name == "test") return bundle.splits.test;
  std::vector<uint32_t> all(bundle.ds.rows);
  for (size_t i = 0; i < all.size(); ++i) all[i] = uint32_t(i);
  return all;
}

inline void print_report(const TrainReport& report) {
  for (size_t e = 0; e < report.train_loss.size(); ++e)
    std::printf("epoch %zu  train_loss %s  train_acc %s  val_loss %s  val_acc %s\n", e + 1,
                fmt(report.train_loss[e]).c_str(), fmt(report.train_acc[e]).c_str(),
                fmt(report.val_loss[e]).c_str(), fmt(report.val_acc[e]).c_str());
  std::printf("stopped at epoch %zu, best epoch %zu, %s s\n", report.stopped_epoch,
              report.best_epoch, fmt(report.wall_seconds, 1).c_str());
}

inline void check_no_empty_class(const std::vector<uint8_t>& actual, size_t k,
                                 const std::vector<std::string>& names) {
  std::vector<size_t> counts(k, 0);
  for (uint8_t c : actual) counts.at(c)++;
  for (size_t c = 0; c < k; ++c)
    if (counts[c] == 0)
      throw EmptyClass("class '" + names[c] + "' has no rows in the evaluated split");
}

}  // namespace detail

inline int run(int argc, const char* const* argv) {
  CLI::App app{"packet capture intrusion detection toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI file with [subcommand] sections; flags win over file values");

  // ---- gen ----------------------------------------------------------------
  struct {
    std::string out;
    uint64_t seed = 1;
    size_t packets = 60000;
    double duration = 600.0;
  } gen_opt;
  auto* gen_cmd = app.add_subcommand("gen", "generate a synthetic labeled capture");
  gen_cmd->add_option("--out", gen_opt.out, "output directory")->required();
  gen_cmd->add_option("--seed", gen_opt.seed, "random seed");
  gen_cmd->add_option("--packets", gen_opt.packets, "total packet budget")
      ->check(CLI::Range(size_t(100), size_t(10000000)));
  gen_cmd->add_option("--duration", gen_opt.duration, "capture length in seconds");
  gen_cmd->callback([&] {
    ScenarioSpec spec;
    spec.seed = gen_opt.seed;
    spec.duration = gen_opt.duration;
    spec.normal_budget = gen_opt.packets / 5;
    size_t per_attack = (gen_opt.packets - spec.normal_budget) / 10;
    spec.normal_budget = gen_opt.packets - per_attack * 10;
    spec.attack_budgets.fill(per_attack);
    auto result = generate(spec, gen_opt.out);
    std::printf("wrote %s (%zu packets)\n", result.pcap_path.c_str(), result.packets);
    std::printf("wrote %s\n", result.rules_path.c_str());
    std::printf("wrote %s\n", result.manifest_path.c_str());
    for (size_t s = 0; s < kSubcategoryCount; ++s)
      std::printf("  %-18s %zu\n", std::string(kSubcategoryNames[s]).c_str(), result.counts[s]);
  });

  // ---- extract ------------------------------------------------------------
  struct {
    std::string pcap, out;
  } ext_opt;
  auto* ext_cmd = app.add_subcommand("extract", "extract per-packet header fields to CSV");
  ext_cmd->add_option("--pcap", ext_opt.pcap, "input capture file")->required();
  ext_cmd->add_option("--out", ext_opt.out, "output CSV path")->required();
  ext_cmd->callback([&] {
    auto result = parse_capture(ext_opt.pcap);
    size_t n = export_records(result.records, ext_opt.out);
    std::printf("wrote %s (%zu rows)\n", ext_opt.out.c_str(), n);
    std::printf("streams: %zu tcp, %zu udp\n", result.tcp_streams, result.udp_streams);
    if (result.skipped_non_ip || result.skipped_malformed || result.skipped_truncated)
      std::printf("skipped: %llu non-ip, %llu malformed, %llu truncated\n",
                  (unsigned long long)result.skipped_non_ip,
                  (unsigned long long)result.skipped_malformed,
                  (unsigned long long)result.skipped_truncated);
  });

  // ---- label --------------------------------------------------------------
  struct {
    std::string csv, rules, out;
    size_t cap = 0;
    double normal_fraction = 1.0;
    uint64_t seed = 1;
  } lab_opt;
  auto* lab_cmd = app.add_subcommand("label", "apply attack rules to an extracted CSV");
  lab_cmd->add_option("--csv", lab_opt.csv, "extracted packet CSV")->required();
  lab_cmd->add_option("--rules", lab_opt.rules, "rules JSONL path")->required();
  lab_cmd->add_option("--out", lab_opt.out, "output labeled CSV")->required();
  lab_cmd->add_option("--cap", lab_opt.cap, "per-subcategory row cap, 0 keeps everything");
  lab_cmd->add_option("--normal-fraction", lab_opt.normal_fraction,
                      "fraction of normal rows kept when capping");
  lab_cmd->add_option("--seed", lab_opt.seed, "subsampling seed");
  lab_cmd->callback([&] {
    auto records = import_records(lab_opt.csv);
    auto rules = read_rules(lab_opt.rules);
    auto table = label_records(std::move(records), rules);
    std::vector<std::string> warnings;
    if (lab_opt.cap > 0)
      table = subsample_stratified(table, lab_opt.cap, lab_opt.normal_fraction, lab_opt.seed,
                                   &warnings);
    for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    size_t n = export_labeled(table, lab_opt.out);
    std::printf("wrote %s (%zu rows)\n", lab_opt.out.c_str(), n);
    std::array<size_t, kSubcategoryCount> counts{};
    for (auto sub : table.subcategory) counts[size_t(sub)]++;
    for (size_t s = 0; s < kSubcategoryCount; ++s)
      if (counts[s])
        std::printf("  %-18s %zu\n", std::string(kSubcategoryNames[s]).c_str(), counts[s]);
  });

  // ---- preprocess ---------------------------------------------------------
  struct {
    std::string labeled, out;
    uint64_t seed = 1;
  } pre_opt;
  auto* pre_cmd = app.add_subcommand("preprocess", "encode a labeled CSV into a dataset bundle");
  pre_cmd->add_option("--labeled", pre_opt.labeled, "labeled CSV path")->required();
  pre_cmd->add_option("--out", pre_opt.out, "output dataset directory")->required();
  pre_cmd->add_option("--seed", pre_opt.seed, "split shuffle seed");
  pre_cmd->callback([&] {
    auto table = import_labeled(pre_opt.labeled);
    std::vector<std::string> warnings;
    auto t = preprocess(table, &warnings);
    for (const auto& w : warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
    auto labels = detail::multiclass_labels(t);
    DatasetBundle bundle;
    bundle.splits = split_stratified(labels, pre_opt.seed);
    auto meta = fit_encoders(t, bundle.splits.train);
    bundle.ds = encode(t, meta);
    std::vector<uint8_t> train_labels;
    for (uint32_t i : bundle.splits.train) train_labels.push_back(labels[i]);
    bundle.weights = class_weights(train_labels, kNumClasses);
    write_dataset(pre_opt.out, bundle);
    std::printf("wrote %s: %zu rows, dense width %zu\n", pre_opt.out.c_str(), bundle.ds.rows,
                bundle.ds.dense_width);
    std::printf("split: %zu train, %zu validation, %zu test\n", bundle.splits.train.size(),
                bundle.splits.validation.size(), bundle.splits.test.size());
    for (size_t c = 0; c < bundle.weights.size(); ++c)
      std::printf("  weight %-15s %s\n", std::string(kClassNames[c]).c_str(),
                  detail::fmt(bundle.weights[c]).c_str());
  });

  // ---- train --------------------------------------------------------------
  struct {
    std::string data, out, mode = "multiclass", subcategory, from;
    TrainConfig cfg;
    bool no_restore_best = false;
  } tr_opt;
  auto* tr_cmd = app.add_subcommand("train", "fit a classifier on a dataset bundle");
  tr_cmd->add_option("--data", tr_opt.data, "dataset directory")->required();
  tr_cmd->add_option("--out", tr_opt.out, "output weights path")->required();
  tr_cmd->add_option("--mode", tr_opt.mode, "multiclass or binary")
      ->check(CLI::IsMember({"multiclass", "binary"}));
  tr_cmd->add_option("--subcategory", tr_opt.subcategory,
                     "attack subcategory for the binary task");
  tr_cmd->add_option("--from", tr_opt.from,
                     "multiclass weights supplying frozen embeddings (binary mode)");
  tr_cmd->add_option("--lr", tr_opt.cfg.lr, "learning rate");
  tr_cmd->add_option("--batch", tr_opt.cfg.batch, "minibatch size");
  tr_cmd->add_option("--epochs", tr_opt.cfg.max_epochs, "maximum epochs");
  tr_cmd->add_option("--patience", tr_opt.cfg.patience, "early stopping patience");
  tr_cmd->add_option("--seed", tr_opt.cfg.seed, "initialization and shuffle seed");
  tr_cmd->add_option("--threads", tr_opt.cfg.threads, "worker threads")
      ->check(CLI::Range(1, 256));
  tr_cmd->add_flag("--no-restore-best", tr_opt.no_restore_best,
                   "keep final weights instead of the best validation epoch");
  tr_cmd->callback([&] {
    tr_opt.cfg.restore_best = !tr_opt.no_restore_best;
    auto bundle = load_dataset(tr_opt.data);
    if (tr_opt.mode == "multiclass") {
      auto w = init_fnn<float>(kNumClasses, bundle.ds.dense_width, tr_opt.cfg.seed);
      auto report = fit(w, bundle.ds, bundle.splits.train, bundle.splits.validation,
                        bundle.ds.labels_mc, bundle.weights, tr_opt.cfg);
      detail::print_report(report);
      save_weights(w, tr_opt.out);
    } else {
      if (tr_opt.from.empty())
        throw CLI::ValidationError("--from", "binary mode needs multiclass weights");
      if (tr_opt.subcategory.empty())
        throw CLI::ValidationError("--subcategory", "binary mode needs a target subcategory");
      auto sub = detail::parse_attack_subcategory(tr_opt.subcategory);
      auto mfnn = load_weights(tr_opt.from, kNumClasses);
      auto w = build_bfnn(mfnn, tr_opt.cfg.seed);
      auto train_idx = detail::filter_to_binary_task(bundle.splits.train, bundle.ds, sub);
      auto val_idx = detail::filter_to_binary_task(bundle.splits.validation, bundle.ds, sub);
      std::vector<uint8_t> train_labels;
      for (uint32_t i : train_idx) train_labels.push_back(bundle.ds.labels_bin[i]);
      auto cw = class_weights(train_labels, 2);
      auto report =
          fit(w, bundle.ds, train_idx, val_idx, bundle.ds.labels_bin, cw, tr_opt.cfg);
      detail::print_report(report);
      save_weights(w, tr_opt.out);
    }
    std::printf("wrote %s\n", tr_opt.out.c_str());
  });

  // ---- evaluate -----------------------------------------------------------
  struct {
    std::string data, weights, split = "test", subcategory, json;
    int threads = 1;
  } ev_opt;
  auto* ev_cmd = app.add_subcommand("evaluate", "score saved weights on a dataset split");
  ev_cmd->add_option("--data", ev_opt.data, "dataset directory")->required();
  ev_cmd->add_option("--weights", ev_opt.weights, "weights path")->required();
  ev_cmd->add_option("--split", ev_opt.split, "train, validation, test or all")
      ->check(CLI::IsMember({"train", "validation", "test", "all"}));
  ev_cmd->add_option("--subcategory", ev_opt.subcategory,
                     "attack subcategory scoped by binary weights");
  ev_cmd->add_option("--json", ev_opt.json, "also write the report as JSON");
  ev_cmd->add_option("--threads", ev_opt.threads, "worker threads")->check(CLI::Range(1, 256));
  ev_cmd->callback([&] {
    auto bundle = load_dataset(ev_opt.data);
    auto w = load_weights(ev_opt.weights);
    auto idx = detail::split_by_name(bundle, ev_opt.split);
    std::vector<std::string> names;
    const std::vector<uint8_t>* labels = nullptr;
    if (w.num_classes == 2) {
      if (ev_opt.subcategory.empty())
        throw CLI::ValidationError("--subcategory", "binary weights need a target subcategory");
      auto sub = detail::parse_attack_subcategory(ev_opt.subcategory);
      idx = detail::filter_to_binary_task(idx, bundle.ds, sub);
      names = {"normal", "attack"};
      labels = &bundle.ds.labels_bin;
    } else {
      names.assign(kClassNames.begin(), kClassNames.end());
      labels = &bundle.ds.labels_mc;
    }
    std::vector<uint8_t> actual;
    for (uint32_t i : idx) actual.push_back((*labels)[i]);
    detail::check_no_empty_class(actual, w.num_classes, names);
    auto predicted = predict(w, bundle.ds, idx, 1024, ev_opt.threads);
    auto report = evaluate_codes(actual, predicted, w.num_classes, names);
    std::fputs(render_report(report).c_str(), stdout);
    if (!ev_opt.json.empty()) {
      write_file(ev_opt.json, report_to_json(report).dump(2) + "\n");
      std::printf("wrote %s\n", ev_opt.json.c_str());
    }
  });

  // ---- predict ------------------------------------------------------------
  struct {
    std::string data, weights, out, split = "test", subcategory;
    int threads = 1;
  } pr_opt;
  auto* pr_cmd = app.add_subcommand("predict", "write per-row predictions to CSV");
  pr_cmd->add_option("--data", pr_opt.data, "dataset directory")->required();
  pr_cmd->add_option("--weights", pr_opt.weights, "weights path")->required();
  pr_cmd->add_option("--out", pr_opt.out, "output CSV path")->required();
  pr_cmd->add_option("--split", pr_opt.split, "train, validation, test or all")
      ->check(CLI::IsMember({"train", "validation", "test", "all"}));
  pr_cmd->add_option("--subcategory", pr_opt.subcategory,
                     "attack subcategory scoped by binary weights");
  pr_cmd->add_option("--threads", pr_opt.threads, "worker threads")->check(CLI::Range(1, 256));
  pr_cmd->callback([&] {
    auto bundle = load_dataset(pr_opt.data);
    auto w = load_weights(pr_opt.weights);
    auto idx = detail::split_by_name(bundle, pr_opt.split);
    std::vector<std::string> names;
    const std::vector<uint8_t>* labels = nullptr;
    if (w.num_classes == 2) {
      if (pr_opt.subcategory.empty())
        throw CLI::ValidationError("--subcategory", "binary weights need a target subcategory");
      auto sub = detail::parse_attack_subcategory(pr_opt.subcategory);
      idx = detail::filter_to_binary_task(idx, bundle.ds, sub);
      names = {"normal", "attack"};
      labels = &bundle.ds.labels_bin;
    } else {
      names.assign(kClassNames.begin(), kClassNames.end());
      labels = &bundle.ds.labels_mc;
    }
    auto predicted = predict(w, bundle.ds, idx, 1024, pr_opt.threads);
    std::ostringstream csv;
    csv_write_row(csv, {"row", "actual", "predicted"});
    for (size_t i = 0; i < idx.size(); ++i)
      csv_write_row(csv, {std::to_string(idx[i]), names[(*labels)[idx[i]]],
                          names[predicted[i]]});
    write_file(pr_opt.out, csv.str());
    std::printf("wrote %s (%zu rows)\n", pr_opt.out.c_str(), idx.size());
  });

  // ---- baseline -----------------------------------------------------------
  struct {
    std::string labeled, out, json;
    size_t subsample = 10000;
    std::vector<double> grid = {0.01, 0.1, 1.0, 10.0};
    int folds = 5;
    uint64_t seed = 1;
    size_t max_epochs = 10000;
  } sv_opt;
  auto* sv_cmd = app.add_subcommand("baseline", "linear SVC baseline with cross-validated C");
  sv_cmd->add_option("--labeled", sv_opt.labeled, "labeled CSV path")->required();
  sv_cmd->add_option("--subsample", sv_opt.subsample, "training subsample size, 0 = full train");
  sv_cmd->add_option("--grid", sv_opt.grid, "C values to cross-validate")->delimiter(',');
  sv_cmd->add_option("--folds", sv_opt.folds, "cross-validation folds")->check(CLI::Range(2, 20));
  sv_cmd->add_option("--seed", sv_opt.seed, "split and solver seed");
  sv_cmd->add_option("--max-epochs", sv_opt.max_epochs, "solver epoch cap");
  sv_cmd->add_option("--out", sv_opt.out, "save the fitted model here");
  sv_cmd->add_option("--json", sv_opt.json, "also write the report as JSON");
  sv_cmd->callback([&] {
    auto table = import_labeled(sv_opt.labeled);
    auto t = preprocess(table);
    auto labels = detail::multiclass_labels(t);
    auto splits = split_stratified(labels, sv_opt.seed);

    std::vector<uint32_t> pool = splits.train;
    if (sv_opt.subsample > 0 && sv_opt.subsample < pool.size()) {
      std::vector<uint8_t> pool_labels;
      for (uint32_t i : pool) pool_labels.push_back(labels[i]);
      auto picked =
          stratified_subsample_indices(pool_labels, kNumClasses, sv_opt.subsample, sv_opt.seed);
      std::vector<uint32_t> rows;
      for (uint32_t p : picked) rows.push_back(pool[p]);
      pool = std::move(rows);
    }
    std::vector<uint8_t> y;
    for (uint32_t i : pool) y.push_back(labels[i]);

    auto meta = fit_svm_meta(t, pool);
    auto x = encode_svm(t, pool, meta);
    auto grid = grid_search_cv(x, y, kNumClasses, sv_opt.grid, sv_opt.folds, sv_opt.seed,
                               sv_opt.max_epochs);
    for (const auto& [c, acc] : grid.accuracy_by_c)
      std::printf("C %-8s cv accuracy %s\n", detail::fmt(c, 2).c_str(),
                  detail::fmt(acc).c_str());
    std::printf("best C %s\n", detail::fmt(grid.best_c, 2).c_str());

    auto cw = class_weights(y, kNumClasses);
    auto model = fit_linear_svc(x, y, kNumClasses, grid.best_c, cw, sv_opt.max_epochs,
                                sv_opt.seed);
    std::printf("solver: %zu epochs, %s\n", model.epochs_used,
                model.converged ? "converged" : "hit the epoch cap");

    auto xt = encode_svm(t, splits.test, meta);
    std::vector<uint8_t> yt;
    for (uint32_t i : splits.test) yt.push_back(labels[i]);
    auto predicted = predict_svm(model, xt);
    std::vector<std::string> names(kClassNames.begin(), kClassNames.end());
    auto report = evaluate_codes(yt, predicted, kNumClasses, names);
    std::fputs(render_report(report).c_str(), stdout);

    if (!sv_opt.out.empty()) {
      save_svm(model, sv_opt.out);
      std::printf("wrote %s\n", sv_opt.out.c_str());
    }
    if (!sv_opt.json.empty()) {
      nlohmann::json j;
      j["best_c"] = grid.best_c;
      for (const auto& [c, acc] : grid.accuracy_by_c)
        j["cv_accuracy"][detail::fmt(c, 2)] = acc;
      j["test"] = report_to_json(report);
      write_file(sv_opt.json, j.dump(2) + "\n");
      std::printf("wrote %s\n", sv_opt.json.c_str());
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}

}  // namespace netids::cli
