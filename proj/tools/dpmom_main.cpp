// dpmom command line: generate data, fit, tune, benchmark, test, plot.
//
// Exit codes: 0 ok, 1 usage error, 2 data error, 3 runtime fault.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <httplib.h>
#include <json.hpp>

#include "dpmom/dpmom.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitRuntime = 3;

int exit_code_for(const dpmom::Error& e) {
  switch (e.code()) {
    case dpmom::ErrorCode::ContractViolation:
      return kExitUsage;
    case dpmom::ErrorCode::ParseError:
    case dpmom::ErrorCode::IoError:
    case dpmom::ErrorCode::DegenerateData:
      return kExitData;
    default:
      return kExitRuntime;
  }
}

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path);
  dpmom::check(out.good(), dpmom::ErrorCode::IoError,
               "cannot write file: " + path);
  out << body;
  dpmom::check(out.good(), dpmom::ErrorCode::IoError, "write failed: " + path);
}

void write_json(const std::string& path, const json& doc) {
  write_text(path, doc.dump(2) + "\n");
}

double median_of(std::vector<double> v) {
  dpmom::check_contract(!v.empty(), "median of empty list");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size();
  return m % 2 ? v[m / 2] : 0.5 * (v[m / 2 - 1] + v[m / 2]);
}

dpmom::ClusteringResult merged_or_same(const dpmom::ClusteringResult& result,
                                       const dpmom::DataMatrix& points,
                                       std::size_t min_size, bool* applied) {
  try {
    auto merged = dpmom::merge_small_clusters(result, points, min_size);
    if (applied) *applied = true;
    return merged;
  } catch (const dpmom::Error& e) {
    if (e.code() != dpmom::ErrorCode::MergeImpossible) throw;
    if (applied) *applied = false;
    return result;
  }
}

double masked_ari(const dpmom::Assignment& truth,
                  const dpmom::Assignment& predicted) {
  auto [t, p] = dpmom::mask_outliers(truth, predicted);
  return dpmom::ari(t, p);
}

// ---------------------------------------------------------------- gen ----

struct GenArgs {
  std::size_t per = 30;
  std::size_t outliers = 0;
  std::uint64_t seed = 0;
  std::string out;
};

int run_gen_quadrant(const GenArgs& args) {
  dpmom::Rng rng(args.seed);
  auto data = dpmom::gen_quadrant(args.per, rng);
  if (args.outliers > 0) {
    dpmom::Rng inject = rng.split(1);
    data = dpmom::inject_outliers(
        data.points, *data.labels, args.outliers,
        std::vector<std::pair<double, double>>{{-1.0, 1.0}, {-1.0, 1.0}},
        inject);
  }
  dpmom::save_csv(data, args.out);
  std::cerr << "wrote " << data.points.rows() << " rows to " << args.out
            << "\n";
  return kExitOk;
}

// ------------------------------------------------------------ cluster ----

struct ClusterArgs {
  std::string algo = "dpmom";
  std::string in;
  std::string out;
  bool no_header = false;
  std::optional<std::size_t> labels_col;
  double lambda = 0.0;
  double eta = 0.0;
  double epsilon = 1.0;
  double delta = 1e-4;
  std::size_t t_max = 200;
  std::size_t buckets = 0;
  std::size_t k = 0;
  std::uint64_t seed = 0;
  std::string scheme = "kmeanspp";
  std::size_t min_cluster_size = 3;
  bool timing = false;
  bool lambda_set = false, eta_set = false, buckets_set = false, k_set = false;
};

int run_cluster(const ClusterArgs& args) {
  const auto data = dpmom::load_csv(args.in, !args.no_header, args.labels_col);
  const auto& points = data.points;

  const auto t0 = std::chrono::steady_clock::now();
  dpmom::ClusteringResult result;
  if (args.algo == "dpmom") {
    dpmom::check_contract(args.lambda_set && args.buckets_set,
                          "cluster --algo dpmom needs --lambda and --L");
    dpmom::check_contract(!args.k_set, "--k is a kmeans flag; dpmom infers k");
    dpmom::DpMomConfig config;
    config.lambda = args.lambda;
    config.eta = args.eta_set ? args.eta
                              : dpmom::default_learning_rate(points).low;
    config.epsilon = args.epsilon;
    config.delta = args.delta;
    config.t_max = args.t_max;
    config.buckets = args.buckets;
    config.seed = args.seed;
    config.scheme = args.scheme == "random" ? dpmom::BucketScheme::random
                                            : dpmom::BucketScheme::kmeanspp;
    result = dpmom::fit(points, config);
  } else if (args.algo == "dpmeans") {
    dpmom::check_contract(args.lambda_set,
                          "cluster --algo dpmeans needs --lambda");
    dpmom::check_contract(!args.k_set && !args.buckets_set && !args.eta_set,
                          "--k/--L/--eta do not apply to dpmeans");
    result = dpmom::dp_means(points, args.lambda, args.t_max, args.delta);
  } else if (args.algo == "kmeans") {
    dpmom::check_contract(args.k_set, "cluster --algo kmeans needs --k");
    dpmom::check_contract(!args.lambda_set && !args.buckets_set && !args.eta_set,
                          "--lambda/--L/--eta do not apply to kmeans");
    dpmom::Rng rng(args.seed);
    auto seeds = dpmom::kmeans_pp_seed(points, args.k, rng);
    result = dpmom::lloyd(points, seeds, args.t_max, args.delta);
    result.seed = args.seed;
  } else {
    throw dpmom::Error(dpmom::ErrorCode::ContractViolation,
                       "unknown --algo: " + args.algo);
  }

  bool merge_applied = false;
  auto reported =
      merged_or_same(result, points, args.min_cluster_size, &merge_applied);
  const auto t1 = std::chrono::steady_clock::now();

  json doc;
  doc["algorithm"] = result.algorithm;
  doc["n"] = points.rows();
  doc["p"] = points.cols();
  doc["k"] = reported.k;
  doc["k_premerge"] = result.k;
  doc["merge_applied"] = merge_applied;
  json labels = json::array();
  for (auto l : reported.labels) labels.push_back(l + 1);  // 1-based on disk
  doc["labels"] = labels;
  doc["centroids"] = reported.centroids.to_rows();
  doc["objective_trace"] = result.objective_trace;
  doc["converged"] = result.converged;
  doc["iterations"] = result.iterations;
  doc["seed"] = result.seed;
  doc["config"] = result.config;
  if (data.labels) {
    doc["ari_vs_labels"] = masked_ari(*data.labels, reported.labels);
  }
  if (args.timing) {
    doc["runtime_ms"] =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
  }
  write_json(args.out, doc);
  std::cerr << result.algorithm << ": k=" << reported.k << " iterations="
            << result.iterations << " wrote " << args.out << "\n";
  return kExitOk;
}

// --------------------------------------------------------------- tune ----

struct TuneArgs {
  std::string in;
  std::string out_dir = ".";
  bool no_header = false;
  std::optional<std::size_t> labels_col;
  bool proxy = false;
  std::size_t repeats = 35;
  std::uint64_t seed = 0;
  bool full_sweep = false;
  std::size_t t_max = 200;
  double delta = 1e-4;
};

json tuning_summary_json(const dpmom::TuningResult& result,
                         std::size_t repeats, std::uint64_t seed) {
  json per_repeat = json::array();
  for (const auto& rep : result.per_repeat) {
    per_repeat.push_back({{"lambda", rep.lambda},
                          {"L", rep.buckets},
                          {"eta", rep.eta},
                          {"ari", std::isnan(rep.ari) ? json() : json(rep.ari)},
                          {"k", rep.k}});
  }
  return json{{"mode", result.proxy ? "proxy" : "supervised"},
              {"lambda_opt", result.lambda_opt},
              {"L_opt", result.l_opt},
              {"eta_opt", result.eta_opt},
              {"lambda_range", {result.lambda_range.first, result.lambda_range.second}},
              {"L_range", {result.l_range.first, result.l_range.second}},
              {"median_ari",
               std::isnan(result.median_ari) ? json() : json(result.median_ari)},
              {"repeats", repeats},
              {"seed", seed},
              {"per_repeat", per_repeat}};
}

int run_tune(const TuneArgs& args) {
  const auto data = dpmom::load_csv(args.in, !args.no_header, args.labels_col);
  dpmom::TuningConfig cfg;
  cfg.repeats = args.repeats;
  cfg.full_l_sweep = args.full_sweep;
  cfg.t_max = args.t_max;
  cfg.delta = args.delta;

  dpmom::TuningResult result;
  if (args.proxy) {
    result = dpmom::unsupervised_proxy_search(data.points, cfg, args.seed);
  } else {
    dpmom::check_contract(
        data.labels.has_value(),
        "tune needs ground truth (--labels-col); without labels use --proxy "
        "for the objective-based search");
    result = dpmom::search(data.points, *data.labels, cfg, args.seed);
  }

  fs::create_directories(args.out_dir);
  const auto trace_path = (fs::path(args.out_dir) / "tuning_trace.csv").string();
  const auto summary_path =
      (fs::path(args.out_dir) / "tuning_summary.json").string();
  dpmom::write_tuning_trace(result, trace_path);
  write_json(summary_path, tuning_summary_json(result, args.repeats, args.seed));
  std::cerr << "tune: lambda_opt=" << result.lambda_opt
            << " L_opt=" << result.l_opt << " wrote " << summary_path << "\n";
  return kExitOk;
}

// -------------------------------------------------------------- stats ----

struct StatsArgs {
  std::string table;
  std::string out;
  std::string baseline = "dpmom";
  std::vector<std::string> drop{"dpmom", "mompkm"};
};

json stats_report_json(const dpmom::AriTable& table, const std::string& baseline,
                       const std::vector<std::string>& drop) {
  json report;

  // staged Friedman: full table, then progressively without the drop rows
  json friedman_stages = json::array();
  auto add_stage = [&](const dpmom::AriTable& t, const std::string& label) {
    const auto r = dpmom::friedman_test(t);
    friedman_stages.push_back({{"stage", label},
                               {"algorithms", t.algorithms.size()},
                               {"statistic", r.statistic},
                               {"p_value", r.p_value}});
  };
  add_stage(table, "all");
  std::vector<std::string> dropped;
  for (const auto& name : drop) {
    dropped.push_back(name);
    add_stage(table.without(dropped), "without " + name);
  }
  report["friedman"] = friedman_stages;

  json ranks;
  const auto mean_ranks = dpmom::average_ranks(table);
  for (std::size_t i = 0; i < table.algorithms.size(); ++i) {
    ranks[table.algorithms[i]] = mean_ranks[i];
  }
  report["average_ranks"] = ranks;

  // paired one-sided tests of the baseline against every other row
  const auto base_row = table.values[table.algo_index(baseline)];
  json pairwise = json::array();
  for (std::size_t i = 0; i < table.algorithms.size(); ++i) {
    if (table.algorithms[i] == baseline) continue;
    std::vector<double> diffs(table.datasets.size());
    std::size_t wins = 0;
    for (std::size_t d = 0; d < diffs.size(); ++d) {
      diffs[d] = base_row[d] - table.values[i][d];
      if (diffs[d] > 0.0) ++wins;
    }
    const auto sign = dpmom::sign_test(wins, diffs.size());
    json entry{{"algorithm", table.algorithms[i]},
               {"sign_statistic", sign.statistic},
               {"sign_p", sign.p_value}};
    try {
      const auto wsr = dpmom::wilcoxon_signed_rank(diffs);
      entry["wsr_statistic"] = wsr.statistic;
      entry["wsr_p"] = wsr.p_value;
    } catch (const dpmom::Error& e) {
      if (e.code() != dpmom::ErrorCode::NoEvidence) throw;
      entry["wsr_statistic"] = json();
      entry["wsr_p"] = json();
    }
    pairwise.push_back(entry);
  }
  report["pairwise_vs_" + baseline] = pairwise;
  return report;
}

int run_stats(const StatsArgs& args) {
  const auto table = dpmom::load_ari_table(args.table);
  write_json(args.out, stats_report_json(table, args.baseline, args.drop));
  std::cerr << "stats: wrote " << args.out << "\n";
  return kExitOk;
}

// --------------------------------------------------------------- bench ----

struct BenchArgs {
  std::string suite = "quadrant";
  std::size_t runs = 30;
  std::size_t tune_repeats = 5;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::string manifest = "data/manifest.json";
  std::string fixture = "data/fixtures/published_ari.csv";
};

// median ARI over seeded runs at a fixed configuration
double dpmom_median_ari(const dpmom::LabeledData& data, double lambda,
                        std::size_t buckets, double eta, std::size_t runs,
                        std::uint64_t seed) {
  std::vector<double> aris;
  for (std::size_t r = 0; r < runs; ++r) {
    dpmom::DpMomConfig config;
    config.lambda = lambda;
    config.buckets = buckets;
    config.eta = eta;
    config.seed = dpmom::derive_rng(seed, 90, r).next_u64();
    try {
      auto fitted = dpmom::fit(data.points, config);
      auto reported = merged_or_same(fitted, data.points, 3, nullptr);
      aris.push_back(masked_ari(*data.labels, reported.labels));
    } catch (const dpmom::Error&) {
      aris.push_back(-1.0);
    }
  }
  return median_of(aris);
}

double kmeans_median_ari(const dpmom::LabeledData& data, std::size_t k,
                         std::size_t runs, std::uint64_t seed) {
  std::vector<double> aris;
  for (std::size_t r = 0; r < runs; ++r) {
    dpmom::Rng rng = dpmom::derive_rng(seed, 91, r);
    auto seeds = dpmom::kmeans_pp_seed(data.points, k, rng);
    auto result = dpmom::lloyd(data.points, seeds);
    aris.push_back(masked_ari(*data.labels, result.labels));
  }
  return median_of(aris);
}

double dpmeans_tuned_lambda(const dpmom::LabeledData& data) {
  const auto bounds = dpmom::lambda_bounds(data.points);
  const auto grid = dpmom::grid_stage(bounds, 11);
  double best_lambda = grid.front();
  double best_ari = -2.0;
  for (double lambda : grid) {
    auto result = dpmom::dp_means(data.points, lambda);
    auto reported = merged_or_same(result, data.points, 3, nullptr);
    const double a = masked_ari(*data.labels, reported.labels);
    if (a > best_ari) {
      best_ari = a;
      best_lambda = lambda;
    }
  }
  return best_lambda;
}

double dpmeans_ari_at(const dpmom::LabeledData& data, double lambda) {
  auto result = dpmom::dp_means(data.points, lambda);
  auto reported = merged_or_same(result, data.points, 3, nullptr);
  return masked_ari(*data.labels, reported.labels);
}

int run_bench_quadrant(const BenchArgs& args) {
  fs::create_directories(args.out_dir);
  dpmom::Rng gen(args.seed == 0 ? 2024 : args.seed);
  auto clean = dpmom::gen_quadrant(30, gen);
  const std::vector<std::pair<double, double>> box{{-1.0, 1.0}, {-1.0, 1.0}};

  dpmom::TuningConfig tcfg;
  tcfg.repeats = args.tune_repeats;
  auto tuned = dpmom::search(clean.points, *clean.labels, tcfg,
                             dpmom::derive_rng(args.seed, 1).next_u64());
  const double dpm_lambda = dpmeans_tuned_lambda(clean);
  std::cerr << "quadrant: tuned lambda=" << tuned.lambda_opt
            << " L=" << tuned.l_opt << " eta=" << tuned.eta_opt
            << " | dpmeans lambda=" << dpm_lambda << "\n";

  std::vector<dpmom::LabeledData> stages{clean};
  for (std::size_t extra : {15u, 15u, 20u}) {
    const auto& prev = stages.back();
    dpmom::Rng inject =
        dpmom::derive_rng(args.seed, 2, stages.size());
    stages.push_back(dpmom::inject_outliers(prev.points, *prev.labels, extra,
                                            box, inject));
  }

  dpmom::AriTable table;
  table.algorithms = {"dpmom", "dpmeans", "kmeans"};
  std::vector<std::size_t> outlier_counts;
  for (const auto& stage : stages) {
    const std::size_t n_out = stage.points.rows() - clean.points.rows();
    outlier_counts.push_back(n_out);
    table.datasets.push_back("outliers" + std::to_string(n_out));
  }
  table.values.assign(3, std::vector<double>(stages.size(), 0.0));
  for (std::size_t s = 0; s < stages.size(); ++s) {
    table.values[0][s] =
        dpmom_median_ari(stages[s], tuned.lambda_opt, tuned.l_opt,
                         tuned.eta_opt, args.runs, args.seed + s);
    table.values[1][s] = dpmeans_ari_at(stages[s], dpm_lambda);
    table.values[2][s] = kmeans_median_ari(stages[s], 4, args.runs, args.seed + s);
  }

  dpmom::save_ari_table(table,
                        (fs::path(args.out_dir) / "ari_table.csv").string());

  // series,x,y trace for the line plotter
  {
    std::ofstream out((fs::path(args.out_dir) / "ari_vs_outliers.csv").string());
    out << "series,x,y\n";
    for (std::size_t a = 0; a < table.algorithms.size(); ++a) {
      for (std::size_t s = 0; s < stages.size(); ++s) {
        out << table.algorithms[a] << ',' << outlier_counts[s] << ','
            << dpmom::format_double(table.values[a][s]) << '\n';
      }
    }
  }

  json report;
  report["suite"] = "quadrant";
  report["runs"] = args.runs;
  report["tuned"] = {{"lambda", tuned.lambda_opt},
                     {"L", tuned.l_opt},
                     {"eta", tuned.eta_opt}};
  report["dpmeans_lambda"] = dpm_lambda;
  json stage_rows = json::array();
  for (std::size_t s = 0; s < stages.size(); ++s) {
    stage_rows.push_back({{"outliers", outlier_counts[s]},
                          {"n", stages[s].points.rows()},
                          {"dpmom_median_ari", table.values[0][s]},
                          {"dpmom_drift", table.values[0][s] - table.values[0][0]},
                          {"dpmeans_ari", table.values[1][s]},
                          {"kmeans_median_ari", table.values[2][s]}});
  }
  report["stages"] = stage_rows;
  write_json((fs::path(args.out_dir) / "stats_report.json").string(), report);
  std::cerr << "quadrant: wrote " << args.out_dir << "/{ari_table.csv,"
            << "ari_vs_outliers.csv,stats_report.json}\n";
  return kExitOk;
}

int run_bench_uci(const BenchArgs& args) {
  fs::create_directories(args.out_dir);
  const auto fixture = dpmom::load_ari_table(args.fixture);

  // published-values statistics; this is the report that mirrors the source
  // tables exactly
  json report;
  report["fixture"] = {{"path", args.fixture},
                       {"note", "published values, not recomputed"}};
  report["published"] =
      stats_report_json(fixture, "dpmom", {"dpmom", "mompkm"});

  // recomputed rows for whichever manifest datasets are actually present
  json recomputed = json::array();
  dpmom::AriTable merged = fixture;
  std::optional<dpmom::Manifest> manifest;
  try {
    manifest = dpmom::load_manifest(args.manifest);
  } catch (const dpmom::Error& e) {
    std::cerr << "warning: manifest unavailable (" << e.what()
              << "); skipping recomputation\n";
  }
  if (manifest) {
    for (const auto& entry : manifest->entries) {
      const auto it = std::find(fixture.datasets.begin(),
                                fixture.datasets.end(), entry.name);
      if (it == fixture.datasets.end()) continue;
      const auto col =
          static_cast<std::size_t>(it - fixture.datasets.begin());
      const auto path = manifest->resolve(entry);
      if (!fs::exists(path)) {
        std::cerr << "warning: dataset " << entry.name << " not present at "
                  << path << "; fixture values kept\n";
        continue;
      }
      auto data = dpmom::load_csv(path, entry.has_header, entry.label_column);
      dpmom::check(data.labels.has_value(), dpmom::ErrorCode::ParseError,
                   "dataset " + entry.name + " has no label column");
      dpmom::TuningConfig tcfg;
      tcfg.repeats = args.tune_repeats;
      auto tuned = dpmom::search(data.points, *data.labels, tcfg,
                                 dpmom::derive_rng(args.seed, 3, col).next_u64());
      const double dpmom_med =
          dpmom_median_ari(data, tuned.lambda_opt, tuned.l_opt, tuned.eta_opt,
                           args.runs, args.seed + col);
      const double dpm = dpmeans_ari_at(data, dpmeans_tuned_lambda(data));
      const double km = kmeans_median_ari(data, entry.k, args.runs,
                                          args.seed + col);
      recomputed.push_back({{"dataset", entry.name},
                            {"dpmom_median_ari", dpmom_med},
                            {"dpmom_protocol_median", tuned.median_ari},
                            {"dpmeans_ari", dpm},
                            {"kmeans_median_ari", km}});
      merged.values[merged.algo_index("dpmom")][col] = tuned.median_ari;
      merged.values[merged.algo_index("dpmeans")][col] = dpm;
      merged.values[merged.algo_index("kmpp")][col] = km;
      std::cerr << entry.name << ": dpmom protocol median=" << tuned.median_ari
                << " dpmeans=" << dpm << " kmeans=" << km << "\n";
    }
  }
  report["recomputed"] = recomputed;
  if (!recomputed.empty()) {
    report["merged"] = {{"note",
                         "fixture table with recomputed rows substituted for "
                         "locally available datasets"},
                        {"stats", stats_report_json(merged, "dpmom",
                                                    {"dpmom", "mompkm"})}};
  }

  dpmom::save_ari_table(merged,
                        (fs::path(args.out_dir) / "ari_table.csv").string());
  write_json((fs::path(args.out_dir) / "stats_report.json").string(), report);
  std::cerr << "uci: wrote " << args.out_dir
            << "/{ari_table.csv,stats_report.json}\n";
  return kExitOk;
}

int run_bench_jain(const BenchArgs& args) {
  fs::create_directories(args.out_dir);
  std::optional<dpmom::Manifest> manifest;
  try {
    manifest = dpmom::load_manifest(args.manifest);
  } catch (const dpmom::Error&) {
  }
  const dpmom::DatasetEntry* entry =
      manifest ? manifest->find("jain") : nullptr;
  if (entry == nullptr || !fs::exists(manifest->resolve(*entry))) {
    std::cerr << "warning: jain dataset not present; see the manifest for the "
                 "source URL. Suite skipped.\n";
    json report{{"suite", "jain-outliers"}, {"skipped", true}};
    write_json((fs::path(args.out_dir) / "stats_report.json").string(), report);
    return kExitOk;
  }

  auto base = dpmom::load_csv(manifest->resolve(*entry), entry->has_header,
                              entry->label_column);
  dpmom::TuningConfig tcfg;
  tcfg.repeats = args.tune_repeats;
  auto tuned = dpmom::search(base.points, *base.labels, tcfg,
                             dpmom::derive_rng(args.seed, 4).next_u64());
  const double dpm_lambda = dpmeans_tuned_lambda(base);

  dpmom::AriTable table;
  table.algorithms = {"dpmom", "dpmeans", "kmeans"};
  std::vector<dpmom::LabeledData> stages{base};
  for (int s = 0; s < 4; ++s) {
    const auto& prev = stages.back();
    dpmom::Rng inject = dpmom::derive_rng(args.seed, 5, s);
    stages.push_back(
        dpmom::inject_outliers(prev.points, *prev.labels, 20, {}, inject));
  }
  std::vector<std::size_t> outlier_counts;
  for (const auto& stage : stages) {
    const std::size_t n_out = stage.points.rows() - base.points.rows();
    outlier_counts.push_back(n_out);
    table.datasets.push_back("outliers" + std::to_string(n_out));
  }
  table.values.assign(3, std::vector<double>(stages.size(), 0.0));
  for (std::size_t s = 0; s < stages.size(); ++s) {
    table.values[0][s] =
        dpmom_median_ari(stages[s], tuned.lambda_opt, tuned.l_opt,
                         tuned.eta_opt, args.runs, args.seed + s);
    table.values[1][s] = dpmeans_ari_at(stages[s], dpm_lambda);
    table.values[2][s] =
        kmeans_median_ari(stages[s], entry->k, args.runs, args.seed + s);
  }
  dpmom::save_ari_table(table,
                        (fs::path(args.out_dir) / "ari_table.csv").string());
  {
    std::ofstream out((fs::path(args.out_dir) / "ari_vs_outliers.csv").string());
    out << "series,x,y\n";
    for (std::size_t a = 0; a < table.algorithms.size(); ++a) {
      for (std::size_t s = 0; s < stages.size(); ++s) {
        out << table.algorithms[a] << ',' << outlier_counts[s] << ','
            << dpmom::format_double(table.values[a][s]) << '\n';
      }
    }
  }
  json report{{"suite", "jain-outliers"},
              {"skipped", false},
              {"tuned",
               {{"lambda", tuned.lambda_opt},
                {"L", tuned.l_opt},
                {"eta", tuned.eta_opt}}},
              {"dpmeans_lambda", dpm_lambda}};
  write_json((fs::path(args.out_dir) / "stats_report.json").string(), report);
  return kExitOk;
}

// ---------------------------------------------------------------- plot ----

struct PlotScatterArgs {
  std::string in;
  std::string data;
  std::string out;
  bool no_header = false;
  std::optional<std::size_t> labels_col;
  std::string dims;
};

int run_plot_scatter(const PlotScatterArgs& args) {
  std::ifstream in(args.in);
  dpmom::check(in.good(), dpmom::ErrorCode::IoError,
               "cannot open result file: " + args.in);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw dpmom::Error(dpmom::ErrorCode::ParseError,
                       "result parse error in " + args.in + ": " + e.what());
  }

  const auto data = dpmom::load_csv(args.data, !args.no_header, args.labels_col);
  const auto labels = doc.at("labels").get<std::vector<std::uint32_t>>();
  dpmom::check(labels.size() == data.points.rows(), dpmom::ErrorCode::ParseError,
               "result labels and data rows disagree");

  std::size_t dim_x = 0, dim_y = 1;
  if (!args.dims.empty()) {
    const auto comma = args.dims.find(',');
    dpmom::check_contract(comma != std::string::npos,
                          "--dims expects two comma-separated 1-based columns");
    dim_x = std::stoul(args.dims.substr(0, comma)) - 1;
    dim_y = std::stoul(args.dims.substr(comma + 1)) - 1;
    dpmom::check_contract(dim_x < data.points.cols() &&
                              dim_y < data.points.cols(),
                          "--dims out of range");
  } else {
    dpmom::check_contract(
        data.points.cols() == 2,
        "scatter needs 2-D data; pick two feature columns with --dims, e.g. "
        "--dims 1,2");
  }

  std::vector<dpmom::ScatterPoint> points(data.points.rows());
  for (std::size_t i = 0; i < data.points.rows(); ++i) {
    points[i].x = data.points.row(i)[dim_x];
    points[i].y = data.points.row(i)[dim_y];
    points[i].cluster = labels[i];
    points[i].outlier =
        data.labels && (*data.labels)[i] == dpmom::kOutlierSentinel;
  }
  dpmom::write_svg(dpmom::render_scatter_svg(points), args.out);
  std::cerr << "plot: wrote " << args.out << "\n";
  return kExitOk;
}

struct PlotLinesArgs {
  std::string in;
  std::string out;
  std::string series_col = "series";
  std::string x_col = "x";
  std::string y_col = "y";
};

int run_plot_lines(const PlotLinesArgs& args) {
  const auto rows = dpmom::read_csv_rows(args.in);
  dpmom::check(!rows.empty(), dpmom::ErrorCode::ParseError,
               "empty trace: " + args.in);
  const auto& header = rows.front().cells;
  auto column_of = [&](const std::string& name) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (header[c] == name) return c;
    }
    throw dpmom::Error(dpmom::ErrorCode::ParseError,
                       "trace has no column named " + name);
  };
  const auto sc = column_of(args.series_col);
  const auto xc = column_of(args.x_col);
  const auto yc = column_of(args.y_col);

  std::vector<dpmom::LineSeries> series;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& cells = rows[r].cells;
    dpmom::check(cells.size() == header.size(), dpmom::ErrorCode::ParseError,
                 "ragged trace row at line " +
                     std::to_string(rows[r].line_number));
    double x = 0.0, y = 0.0;
    dpmom::check(dpmom::parse_double(cells[xc], x) &&
                     dpmom::parse_double(cells[yc], y),
                 dpmom::ErrorCode::ParseError,
                 "non-numeric trace cell at line " +
                     std::to_string(rows[r].line_number));
    auto it = std::find_if(series.begin(), series.end(),
                           [&](const auto& s) { return s.name == cells[sc]; });
    if (it == series.end()) {
      series.push_back({cells[sc], {}});
      it = series.end() - 1;
    }
    it->points.emplace_back(x, y);
  }
  dpmom::check(!series.empty(), dpmom::ErrorCode::ParseError,
               "trace has no data rows: " + args.in);
  dpmom::write_svg(dpmom::render_lines_svg(series), args.out);
  std::cerr << "plot: wrote " << args.out << "\n";
  return kExitOk;
}

// --------------------------------------------------------------- probe ----

struct ProbeArgs {
  std::string out_dir = ".";
  std::size_t seeds = 0;  // 0 = probe default
};

int run_probe_rate_trend(const ProbeArgs& args) {
  dpmom::RateTrendConfig cfg;
  if (args.seeds > 0) cfg.seeds = args.seeds;
  auto report = dpmom::rate_trend(cfg);
  fs::create_directories(args.out_dir);
  write_json((fs::path(args.out_dir) / "rate_trend_report.json").string(),
             dpmom::to_json(report));
  dpmom::write_rate_trend_trace(
      report, (fs::path(args.out_dir) / "rate_trend_trace.csv").string());
  std::cerr << "probe: slope=" << report.slope << " wrote " << args.out_dir
            << "/rate_trend_report.json\n";
  return kExitOk;
}

int run_probe_contamination(const ProbeArgs& args) {
  dpmom::ContaminationConfig cfg;
  if (args.seeds > 0) {
    cfg.seeds.clear();
    for (std::uint64_t s = 1; s <= args.seeds; ++s) cfg.seeds.push_back(s);
  }
  cfg.dpmeans_lambda = 0.778;
  auto report = dpmom::contamination_sweep(cfg);
  fs::create_directories(args.out_dir);
  write_json((fs::path(args.out_dir) / "contamination_report.json").string(),
             dpmom::to_json(report));
  dpmom::write_contamination_trace(
      report, (fs::path(args.out_dir) / "contamination_trace.csv").string());
  std::cerr << "probe: wrote " << args.out_dir
            << "/contamination_report.json\n";
  return kExitOk;
}

// ---------------------------------------------------------------- data ----

struct DataArgs {
  std::string manifest = "data/manifest.json";
  std::string name;
};

int run_data_verify(const DataArgs& args) {
  const auto manifest = dpmom::load_manifest(args.manifest);
  int failures = 0;
  for (const auto& entry : manifest.entries) {
    if (!args.name.empty() && entry.name != args.name) continue;
    const auto report = dpmom::verify_dataset(manifest, entry);
    std::cout << entry.name << ": ";
    if (!report.present) {
      std::cout << "missing (expected at " << manifest.resolve(entry)
                << "; source " << (entry.url.empty() ? "unknown" : entry.url)
                << ")\n";
      continue;
    }
    std::cout << "present, n=" << report.n << " p=" << report.p
              << (report.shape_ok ? "" : " SHAPE MISMATCH") << ", sha256 ";
    if (!report.checksum_pinned) {
      std::cout << "unpinned (computed " << report.computed_sha256 << ")";
    } else if (report.checksum_ok) {
      std::cout << "ok";
    } else {
      std::cout << "MISMATCH (computed " << report.computed_sha256 << ")";
      ++failures;
    }
    if (!report.shape_ok) ++failures;
    std::cout << "\n";
  }
  return failures == 0 ? kExitOk : kExitData;
}

int run_data_fetch(const DataArgs& args) {
  const auto manifest = dpmom::load_manifest(args.manifest);
  const auto* entry = manifest.find(args.name);
  dpmom::check(entry != nullptr, dpmom::ErrorCode::ContractViolation,
               "manifest has no dataset named " + args.name);
  dpmom::check(!entry->url.empty(), dpmom::ErrorCode::ContractViolation,
               "dataset " + args.name + " has no source URL");
  dpmom::check(entry->url.rfind("http://", 0) == 0,
               dpmom::ErrorCode::IoError,
               "this build downloads plain http only; fetch " + entry->url +
                   " manually and place it at " + manifest.resolve(*entry));

  const auto scheme_end = entry->url.find("://") + 3;
  const auto path_start = entry->url.find('/', scheme_end);
  const std::string host = entry->url.substr(scheme_end, path_start - scheme_end);
  const std::string path =
      path_start == std::string::npos ? "/" : entry->url.substr(path_start);

  httplib::Client client(host);
  client.set_follow_location(true);
  auto response = client.Get(path);
  dpmom::check(response && response->status == 200, dpmom::ErrorCode::IoError,
               "download failed for " + entry->url);
  write_text(manifest.resolve(*entry), response->body);
  const auto report = dpmom::verify_dataset(manifest, *entry);
  std::cout << "fetched " << args.name << ", sha256 "
            << report.computed_sha256
            << (report.checksum_pinned
                    ? (report.checksum_ok ? " (matches manifest)"
                                          : " (MISMATCH with manifest)")
                    : " (not pinned yet)")
            << "\n";
  return report.checksum_pinned && !report.checksum_ok ? kExitData : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dpmom: robust nonparametric centroid clustering toolkit"};
  app.require_subcommand(1);

  GenArgs gen_args;
  auto* gen = app.add_subcommand("gen", "generate synthetic datasets");
  gen->require_subcommand(1);
  auto* gen_quadrant = gen->add_subcommand(
      "quadrant", "four angular clusters on the unit disc plus outliers");
  gen_quadrant->add_option("--per", gen_args.per, "points per quadrant");
  gen_quadrant->add_option("--outliers", gen_args.outliers,
                           "uniform outliers on [-1,1]^2 to append");
  gen_quadrant->add_option("--seed", gen_args.seed, "rng seed");
  gen_quadrant->add_option("--out", gen_args.out, "output CSV")->required();

  ClusterArgs cl;
  auto* cluster = app.add_subcommand("cluster", "fit one clustering model");
  cluster->add_option("--algo", cl.algo, "dpmom | dpmeans | kmeans")
      ->check(CLI::IsMember({"dpmom", "dpmeans", "kmeans"}));
  cluster->add_option("--in", cl.in, "input CSV")->required();
  cluster->add_option("--out", cl.out, "output JSON")->required();
  cluster->add_flag("--no-header", cl.no_header, "input has no header row");
  std::size_t cl_labels_col = 0;
  auto* cl_labels_opt = cluster->add_option(
      "--labels-col", cl_labels_col, "1-based ground-truth column (excluded "
                                     "from features; enables ARI output)");
  auto* opt_lambda = cluster->add_option("--lambda", cl.lambda, "cluster penalty");
  auto* opt_eta = cluster->add_option("--eta", cl.eta,
                                      "learning rate (default: data heuristic)");
  cluster->add_option("--epsilon", cl.epsilon, "adagrad stabilizer");
  cluster->add_option("--delta", cl.delta, "relative objective tolerance");
  cluster->add_option("--tmax", cl.t_max, "iteration cap");
  auto* opt_buckets = cluster->add_option("--L", cl.buckets, "bucket count");
  auto* opt_k = cluster->add_option("--k", cl.k, "cluster count (kmeans)");
  cluster->add_option("--seed", cl.seed, "rng seed");
  cluster->add_option("--scheme", cl.scheme, "bucket scheme: kmeanspp | random")
      ->check(CLI::IsMember({"kmeanspp", "random"}));
  cluster->add_option("--min-cluster-size", cl.min_cluster_size,
                      "post-hoc merge threshold");
  cluster->add_flag("--timing", cl.timing, "include wall time in the JSON");

  TuneArgs tn;
  auto* tune = app.add_subcommand("tune", "three-stage grid search protocol");
  tune->add_option("--in", tn.in, "input CSV")->required();
  tune->add_option("--out-dir", tn.out_dir, "output directory");
  tune->add_flag("--no-header", tn.no_header, "input has no header row");
  std::size_t tn_labels_col = 0;
  auto* tn_labels_opt =
      tune->add_option("--labels-col", tn_labels_col, "ground-truth column");
  tune->add_flag("--proxy", tn.proxy,
                 "label-free search scored by the penalized objective");
  tune->add_option("--repeats", tn.repeats, "protocol repetitions");
  tune->add_option("--seed", tn.seed, "rng seed");
  tune->add_flag("--full-sweep", tn.full_sweep,
                 "sweep every admissible L even for large n");
  tune->add_option("--tmax", tn.t_max, "per-fit iteration cap");
  tune->add_option("--delta", tn.delta, "per-fit tolerance");

  BenchArgs bn;
  auto* bench = app.add_subcommand("bench", "benchmark suites");
  bench->add_option("--suite", bn.suite, "quadrant | jain-outliers | uci")
      ->check(CLI::IsMember({"quadrant", "jain-outliers", "uci"}));
  bench->add_option("--runs", bn.runs, "seeded runs per median");
  bench->add_option("--tune-repeats", bn.tune_repeats,
                    "protocol repeats used for tuning inside the suite");
  bench->add_option("--seed", bn.seed, "rng seed");
  bench->add_option("--out-dir", bn.out_dir, "output directory");
  bench->add_option("--manifest", bn.manifest, "dataset manifest path");
  bench->add_option("--fixture", bn.fixture, "published ARI fixture CSV");

  StatsArgs st;
  auto* stats = app.add_subcommand("stats", "Friedman, sign and WSR tests "
                                            "over an ARI table");
  stats->add_option("--table", st.table, "AriTable CSV")->required();
  stats->add_option("--out", st.out, "output JSON")->required();
  stats->add_option("--baseline", st.baseline, "row for pairwise tests");
  stats->add_option("--drop", st.drop,
                    "rows removed in successive Friedman stages");

  PlotScatterArgs ps;
  PlotLinesArgs pl;
  auto* plot = app.add_subcommand("plot", "render SVG figures");
  plot->require_subcommand(1);
  auto* scatter = plot->add_subcommand("scatter", "cluster scatter plot");
  scatter->add_option("--in", ps.in, "cluster result JSON")->required();
  scatter->add_option("--data", ps.data, "data CSV")->required();
  scatter->add_option("--out", ps.out, "output SVG")->required();
  scatter->add_flag("--no-header", ps.no_header, "data has no header row");
  std::size_t ps_labels_col = 0;
  auto* ps_labels_opt = scatter->add_option(
      "--labels-col", ps_labels_col,
      "ground-truth column (marks outlier rows with a cross)");
  scatter->add_option("--dims", ps.dims, "two 1-based feature columns, e.g. 1,2");
  auto* lines = plot->add_subcommand("lines", "line chart from a trace CSV");
  lines->add_option("--in", pl.in, "trace CSV with series,x,y columns")
      ->required();
  lines->add_option("--out", pl.out, "output SVG")->required();
  lines->add_option("--series-col", pl.series_col, "series column name");
  lines->add_option("--x-col", pl.x_col, "x column name");
  lines->add_option("--y-col", pl.y_col, "y column name");

  ProbeArgs pr;
  auto* probe = app.add_subcommand("probe", "empirical theory probes");
  probe->require_subcommand(1);
  auto* rate = probe->add_subcommand("rate-trend",
                                     "objective gap versus sample size");
  rate->add_option("--out-dir", pr.out_dir, "output directory");
  rate->add_option("--seeds", pr.seeds, "seeds per sample size");
  auto* contam = probe->add_subcommand("contamination",
                                       "ARI under growing contamination");
  contam->add_option("--out-dir", pr.out_dir, "output directory");
  contam->add_option("--seeds", pr.seeds, "data seeds");

  DataArgs da;
  auto* data_cmd = app.add_subcommand("data", "dataset manifest helpers");
  data_cmd->require_subcommand(1);
  auto* verify = data_cmd->add_subcommand("verify",
                                          "check checksums and shapes");
  verify->add_option("--manifest", da.manifest, "manifest path");
  verify->add_option("--name", da.name, "verify a single dataset");
  auto* fetch = data_cmd->add_subcommand("fetch", "download a dataset");
  fetch->add_option("--manifest", da.manifest, "manifest path");
  fetch->add_option("--name", da.name, "dataset name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (gen_quadrant->parsed()) return run_gen_quadrant(gen_args);
    if (cluster->parsed()) {
      cl.lambda_set = opt_lambda->count() > 0;
      cl.eta_set = opt_eta->count() > 0;
      cl.buckets_set = opt_buckets->count() > 0;
      cl.k_set = opt_k->count() > 0;
      if (cl_labels_opt->count() > 0) cl.labels_col = cl_labels_col;
      return run_cluster(cl);
    }
    if (tune->parsed()) {
      if (tn_labels_opt->count() > 0) tn.labels_col = tn_labels_col;
      return run_tune(tn);
    }
    if (bench->parsed()) {
      if (bn.suite == "quadrant") return run_bench_quadrant(bn);
      if (bn.suite == "uci") return run_bench_uci(bn);
      return run_bench_jain(bn);
    }
    if (stats->parsed()) return run_stats(st);
    if (scatter->parsed()) {
      if (ps_labels_opt->count() > 0) ps.labels_col = ps_labels_col;
      return run_plot_scatter(ps);
    }
    if (lines->parsed()) return run_plot_lines(pl);
    if (rate->parsed()) return run_probe_rate_trend(pr);
    if (contam->parsed()) return run_probe_contamination(pr);
    if (verify->parsed()) return run_data_verify(da);
    if (fetch->parsed()) return run_data_fetch(da);
  } catch (const dpmom::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}
