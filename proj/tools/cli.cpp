#include "cli.hpp"

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "flowguard/clustering.hpp"
#include "flowguard/csv.hpp"
#include "flowguard/detector.hpp"
#include "flowguard/error.hpp"
#include "flowguard/evaluation.hpp"
#include "flowguard/pipeline.hpp"
#include "flowguard/scaler.hpp"
#include "flowguard/synthgen.hpp"
#include "flowguard/tuning.hpp"
#include "json.hpp"

namespace flowguard::cli {

namespace {

using json = nlohmann::ordered_json;

/// Bad flag combinations found after parsing; reported like parse errors.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::shared_ptr<spdlog::logger> make_logger(std::ostream& err) {
  auto sink = std::make_shared<spdlog::sinks::ostream_sink_st>(err);
  auto log = std::make_shared<spdlog::logger>("flowguard", sink);
  log->set_pattern("flowguard: %l: %v");
  log->set_level(spdlog::level::warn);
  if (const char* env = std::getenv("FLOWGUARD_LOG")) {
    const auto level = spdlog::level::from_str(env);
    // from_str maps unknown names to off; accept only the real "off".
    if (level != spdlog::level::off || std::string(env) == "off") log->set_level(level);
  }
  return log;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::UnwritablePath, "cannot write " + path);
  return f;
}

void write_text(const std::string& path, const std::string& text) {
  auto f = open_output(path);
  f << text;
  if (!text.empty() && text.back() != '\n') f << '\n';
  if (!f) throw Error(ErrorCode::UnwritablePath, "write failed for " + path);
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::IoError, "cannot open " + path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

const std::map<std::string, Scenario> kScenarioNames = [] {
  std::map<std::string, Scenario> m;
  for (Scenario s : all_scenarios()) m.emplace(to_string(s), s);
  return m;
}();

const std::map<std::string, SegmentMode> kModeNames = {{"slotted", SegmentMode::Slotted},
                                                       {"windowed", SegmentMode::Windowed}};
const std::map<std::string, Algorithm> kAlgoNames = {{"dbscan", Algorithm::Dbscan}, {"hdbscan", Algorithm::Hdbscan}};
const std::map<std::string, ScoreKind> kScoreNames = {{"silhouette", ScoreKind::Silhouette}, {"dbcv", ScoreKind::Dbcv}};

// ---- gen -------------------------------------------------------------------

struct GenArgs {
  ScenarioConfig cfg;
  std::string out_pcap;
  std::string out_labels;
  std::string summary;
};

void add_gen(CLI::App& app, GenArgs& a) {
  auto* c = app.add_subcommand("gen", "Generate a labelled synthetic capture");
  c->add_option("--scenario", a.cfg.scenario, "AN1..AN6, AN7.1..AN7.7")
      ->required()
      ->transform(CLI::CheckedTransformer(kScenarioNames));
  c->add_option("--seed", a.cfg.seed, "PRNG seed")->capture_default_str();
  c->add_flag("--tls", a.cfg.tls, "Add TLS record framing and handshake prologue");
  c->add_option("--duration", a.cfg.duration_s, "Capture length in seconds")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  c->add_option("--rtus", a.cfg.n_rtus, "Number of outstations")->capture_default_str()->check(CLI::Range(1, 200));
  c->add_option("--poll", a.cfg.poll_interval_s, "Poll interval in seconds")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  c->add_option("--jitter", a.cfg.jitter_frac, "Relative poll jitter in [0, 1)")->capture_default_str();
  c->add_option("--scan-targets", a.cfg.scan_targets, "Probe count for scan scenarios")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  c->add_option("--out-pcap", a.out_pcap, "Output capture")->required();
  c->add_option("--out-labels", a.out_labels, "Output label CSV")->required();
  c->add_option("--summary", a.summary, "Also write the JSON summary to this file");
}

void run_gen(const GenArgs& a, std::ostream& out) {
  if (!(a.cfg.jitter_frac >= 0.0 && a.cfg.jitter_frac < 1.0)) throw UsageError("--jitter must be in [0, 1)");
  const auto summary = generate(a.cfg, a.out_pcap, a.out_labels);
  if (!a.summary.empty()) write_text(a.summary, summary.to_json());
  out << summary.to_json() << '\n';
}

// ---- extract ---------------------------------------------------------------

struct ExtractArgs {
  std::string pcap;
  SegmenterConfig cfg;
  std::string out;
};

void add_extract(CLI::App& app, ExtractArgs& a) {
  auto* c = app.add_subcommand("extract", "Segment a capture and compute feature vectors");
  c->add_option("--pcap", a.pcap, "Input capture (classic pcap)")->required();
  c->add_option("--mode", a.cfg.mode, "slotted or windowed")
      ->transform(CLI::CheckedTransformer(kModeNames))
      ->default_str("slotted");
  c->add_option("--timespan", a.cfg.timespan_s, "Segment length t in seconds")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  c->add_option("--idle-timeout", a.cfg.idle_timeout_s, "Close flows idle this long (seconds)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  c->add_option("--stride", a.cfg.windowed_stride, "Windowed mode: evaluate every n-th packet")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  c->add_option("--out", a.out, "Output feature CSV")->required();
}

void run_extract(const ExtractArgs& a, std::ostream& out, spdlog::logger& log) {
  try {
    a.cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  IngestStats stats;
  const auto vectors = extract_features(a.pcap, a.cfg, &stats);
  if (stats.truncated_tail) log.warn("{}: capture ends in a truncated record", a.pcap);
  write_features_csv(a.out, vectors);
  json j;
  j["segments"] = vectors.size();
  j["decoded"] = stats.decoded;
  j["skipped_non_tcp"] = stats.skipped_non_tcp;
  j["skipped_non_ipv4"] = stats.skipped_non_ipv4;
  j["truncated"] = stats.truncated;
  out << j.dump() << '\n';
}

// ---- kdist -----------------------------------------------------------------

struct KdistArgs {
  std::string features;
  std::size_t k = 4;
  std::string out;
};

void add_kdist(CLI::App& app, KdistArgs& a) {
  auto* c = app.add_subcommand("kdist", "Sorted k-distance curve of the scaled features");
  c->add_option("--features", a.features, "Feature CSV")->required();
  c->add_option("--k", a.k, "Neighbour rank")->capture_default_str()->check(CLI::PositiveNumber);
  c->add_option("--out", a.out, "Output curve CSV")->required();
}

void run_kdist(const KdistArgs& a, std::ostream& out) {
  const auto table = read_features_csv(std::filesystem::path(a.features));
  const Matrix scaled = transform(fit_scaler(table.values), table.values);
  const auto curve = k_distance(scaled, a.k);
  {
    auto f = open_output(a.out);
    write_kdistance_csv(f, curve);
  }
  json j;
  j["k"] = a.k;
  j["points"] = curve.distances.size();
  if (curve.distances.size() >= 3) {
    const auto [lo, hi] = suggest_eps_range(curve);
    j["knee_index"] = knee_index(curve.distances);
    j["eps_low"] = lo;
    j["eps_high"] = hi;
  }
  out << j.dump() << '\n';
}

// ---- tune ------------------------------------------------------------------

struct TuneArgs {
  std::string features;
  Algorithm algo = Algorithm::Dbscan;
  ScoreKind score = ScoreKind::Silhouette;
  std::string grid;
  std::string out;
  std::string csv;
  std::size_t parallel = 0;
  double memory_cap_mb = 0.0;
  bool timings = false;
};

void add_tune(CLI::App& app, TuneArgs& a) {
  auto* c = app.add_subcommand("tune", "Grid search over clustering hyperparameters");
  c->add_option("--features", a.features, "Feature CSV")->required();
  c->add_option("--algo", a.algo, "dbscan or hdbscan")->transform(CLI::CheckedTransformer(kAlgoNames))->required();
  c->add_option("--score", a.score, "silhouette or dbcv")
      ->transform(CLI::CheckedTransformer(kScoreNames))
      ->default_str("silhouette");
  c->add_option("--grid", a.grid, "Grid JSON: {eps|min_cluster_size, min_samples, max_parallel?}")->required();
  c->add_option("--out", a.out, "Output report JSON")->required();
  c->add_option("--csv", a.csv, "Also write the report as CSV");
  c->add_option("--parallel", a.parallel, "Worker bound (overrides the grid file)")->check(CLI::PositiveNumber);
  c->add_option("--memory-cap-mb", a.memory_cap_mb, "Skip candidates estimated above this working set")
      ->check(CLI::NonNegativeNumber);
  c->add_flag("--timings", a.timings, "Record per-candidate wall time (output is then not reproducible)");
}

template <class T>
std::vector<T> json_list(const json& grid, const char* key) {
  std::vector<T> v;
  if (!grid.contains(key)) return v;
  if (!grid[key].is_array()) throw UsageError(std::string("grid key '") + key + "' must be a list");
  for (const auto& x : grid[key]) {
    if (!x.is_number()) throw UsageError(std::string("grid key '") + key + "' must hold numbers");
    if constexpr (std::is_integral_v<T>) {
      if (!x.is_number_unsigned()) throw UsageError(std::string("grid key '") + key + "' must hold positive integers");
    }
    v.push_back(x.get<T>());
  }
  return v;
}

GridSpec parse_grid(const std::string& text, const TuneArgs& a) {
  json grid;
  try {
    grid = json::parse(text);
  } catch (const json::exception& e) {
    throw UsageError("grid file is not valid JSON: " + std::string(e.what()));
  }
  if (!grid.is_object()) throw UsageError("grid file must hold a JSON object");
  static const std::vector<std::string> known = {"eps", "min_cluster_size", "min_samples", "max_parallel",
                                                 "memory_cap_mb"};
  for (const auto& item : grid.items()) {
    if (std::find(known.begin(), known.end(), item.key()) == known.end()) {
      throw UsageError("unknown grid key '" + item.key() + "'");
    }
  }
  GridSpec spec;
  spec.algo = a.algo;
  spec.score = a.score;
  spec.eps_values = json_list<double>(grid, "eps");
  spec.min_cluster_sizes = json_list<std::size_t>(grid, "min_cluster_size");
  spec.min_samples_values = json_list<std::size_t>(grid, "min_samples");
  spec.max_parallel = grid.value("max_parallel", std::size_t{1});
  double cap_mb = grid.value("memory_cap_mb", 0.0);
  if (a.parallel > 0) spec.max_parallel = a.parallel;
  if (a.memory_cap_mb > 0.0) cap_mb = a.memory_cap_mb;
  spec.memory_cap_bytes = static_cast<std::size_t>(cap_mb * 1024.0 * 1024.0);
  try {
    spec.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return spec;
}

void run_tune(const TuneArgs& a, std::ostream& out, spdlog::logger& log) {
  const GridSpec spec = parse_grid(read_text(a.grid), a);
  const auto table = read_features_csv(std::filesystem::path(a.features));
  const Matrix scaled = transform(fit_scaler(table.values), table.values);
  log.info("tuning {} candidates on {} points", spec.eps_values.size() + spec.min_cluster_sizes.size(),
           scaled.rows());
  const TuningReport report = grid_search(scaled, spec);
  write_text(a.out, report_to_json(report, a.timings));
  if (!a.csv.empty()) write_text(a.csv, report_to_csv(report, a.timings));
  const auto& best = report.best_row();
  json j;
  j["algo"] = to_string(report.algo);
  j["score_kind"] = to_string(report.score);
  j["candidates"] = report.rows.size();
  j["failed"] = std::count_if(report.rows.begin(), report.rows.end(), [](const TuningRow& r) { return r.failed; });
  json b;
  if (report.algo == Algorithm::Dbscan) {
    b["eps"] = best.params.eps;
  } else {
    b["min_cluster_size"] = best.params.min_cluster_size;
  }
  b["min_samples"] = best.params.min_samples;
  b["score"] = best.score;
  b["n_clusters"] = best.n_clusters;
  b["n_noise"] = best.n_noise;
  j["best"] = std::move(b);
  out << j.dump() << '\n';
}

// ---- train -----------------------------------------------------------------

struct TrainArgs {
  std::string features;
  Algorithm algo = Algorithm::Dbscan;
  std::optional<double> eps;
  std::size_t min_samples = 4;
  std::optional<std::size_t> min_cluster_size;
  bool mpd = false;
  double alpha = 0.1;
  std::string mode = "slotted";
  double timespan = 60.0;
  std::string created;
  std::string out;
};

void add_train(CLI::App& app, TrainArgs& a) {
  auto* c = app.add_subcommand("train", "Cluster benign features and build a detection model");
  c->add_option("--features", a.features, "Feature CSV of benign traffic")->required();
  c->add_option("--algo", a.algo, "dbscan or hdbscan")->transform(CLI::CheckedTransformer(kAlgoNames))->required();
  c->add_option("--eps", a.eps, "DBSCAN neighbourhood radius (scaled space)")->check(CLI::PositiveNumber);
  c->add_option("--min-samples", a.min_samples, "Core point neighbourhood size")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  c->add_option("--min-cluster-size", a.min_cluster_size, "HDBSCAN minimum cluster size")->check(CLI::Range(2, 1 << 30));
  c->add_flag("--mpd", a.mpd, "DBSCAN: derive eps from the mean pairwise distance");
  c->add_option("--alpha", a.alpha, "Scale factor applied to the mean pairwise distance")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  c->add_option("--mode", a.mode, "Segmentation mode recorded in the model")
      ->check(CLI::IsMember({"slotted", "windowed"}))
      ->capture_default_str();
  c->add_option("--timespan", a.timespan, "Timespan recorded in the model")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  c->add_option("--created", a.created, "Free-form creation note stored in the model");
  c->add_option("--out", a.out, "Output model JSON")->required();
}

void run_train(const TrainArgs& a, std::ostream& out, spdlog::logger& log) {
  if (a.algo == Algorithm::Dbscan && a.eps.has_value() == a.mpd) {
    throw UsageError("dbscan needs exactly one of --eps or --mpd");
  }
  if (a.algo == Algorithm::Hdbscan && (a.eps || a.mpd)) throw UsageError("--eps and --mpd apply to dbscan only");
  if (a.algo == Algorithm::Dbscan && a.min_cluster_size) throw UsageError("--min-cluster-size applies to hdbscan only");

  const auto table = read_features_csv(std::filesystem::path(a.features));
  ScalerParams scaler = fit_scaler(table.values);
  const Matrix scaled = transform(scaler, table.values);

  ModelMeta meta;
  meta.algo = to_string(a.algo);
  meta.mode = a.mode;
  meta.timespan_s = a.timespan;
  meta.created = a.created;
  ClusterAssignment assignment;
  if (a.algo == Algorithm::Dbscan) {
    double eps = a.eps.value_or(0.0);
    std::size_t ms = a.min_samples;
    if (a.mpd) std::tie(eps, ms) = mpd_params(scaled, a.min_samples, a.alpha);
    log.info("dbscan eps={} min_samples={}", eps, ms);
    assignment = dbscan(scaled, eps, ms);
    meta.params = {{"eps", eps}, {"min_samples", static_cast<double>(ms)}};
  } else {
    const std::size_t mcs = a.min_cluster_size.value_or(5);
    assignment = hdbscan(scaled, mcs, a.min_samples);
    meta.params = {{"min_cluster_size", static_cast<double>(mcs)}, {"min_samples", static_cast<double>(a.min_samples)}};
  }
  const DetectionModel model = build_model(scaled, assignment, std::move(scaler), std::move(meta));
  save_model(model, a.out);
  json j;
  j["points"] = scaled.rows();
  j["clusters"] = assignment.n_clusters;
  j["noise"] = assignment.n_noise;
  j["retained"] = model.train_points().rows();
  j["params"] = json::object();
  for (const auto& [k, v] : model.meta().params) j["params"][k] = v;
  out << j.dump() << '\n';
}

// ---- classify --------------------------------------------------------------

struct ClassifyArgs {
  std::string model;
  std::string features;
  std::string out;
};

void add_classify(CLI::App& app, ClassifyArgs& a) {
  auto* c = app.add_subcommand("classify", "Label feature vectors benign or anomaly");
  c->add_option("--model", a.model, "Model JSON from train")->required();
  c->add_option("--features", a.features, "Feature CSV")->required();
  c->add_option("--out", a.out, "Output results CSV")->required();
}

void run_classify(const ClassifyArgs& a, std::ostream& out) {
  const DetectionModel model = load_model(a.model);
  const auto table = read_features_csv(std::filesystem::path(a.features));
  const auto results = classify_batch(model, table.values);
  {
    auto f = open_output(a.out);
    write_results_csv(f, table.meta, results);
  }
  json j;
  j["segments"] = results.size();
  j["anomalies"] =
      std::count_if(results.begin(), results.end(), [](const DetectionResult& r) { return r.verdict == Verdict::Anomaly; });
  out << j.dump() << '\n';
}

// ---- evaluate --------------------------------------------------------------

struct EvaluateArgs {
  std::string results;
  std::string labels;
  std::string out;
  bool effect_positive = false;
  bool table = false;
};

void add_evaluate(CLI::App& app, EvaluateArgs& a) {
  auto* c = app.add_subcommand("evaluate", "Precision, recall and F1 against ground-truth labels");
  c->add_option("--results", a.results, "Results CSV from classify")->required();
  c->add_option("--labels", a.labels, "Label CSV")->required();
  c->add_option("--out", a.out, "Output report JSON")->required();
  c->add_flag("--effect-positive", a.effect_positive, "Count effect-labelled segments as positives");
  c->add_flag("--table", a.table, "Print a human-readable table to stderr");
}

void run_evaluate(const EvaluateArgs& a, std::ostream& out, std::ostream& err) {
  const auto results = read_results_csv(a.results);
  const auto spec = read_labels_csv(std::filesystem::path(a.labels));
  std::vector<SegmentLabel> labels;
  labels.reserve(results.meta.size());
  for (const auto& m : results.meta) labels.push_back(label_of(m, spec));
  const EvalReport report = evaluate(results.results, labels, {a.effect_positive});
  write_text(a.out, report_to_json(report));
  if (a.table) err << report_to_table(report);
  json j;
  j["segments"] = results.results.size();
  j["ignored"] = report.ignored_count;
  j["precision"] = report.overall.precision;
  j["recall"] = report.overall.recall;
  j["f1"] = report.overall.f1;
  out << j.dump() << '\n';
}

int data_error(std::ostream& err, const std::string& what) {
  err << "flowguard: error: " << what << '\n';
  return kExitData;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app("Flow-based anomaly detection for SCADA traffic", "flowguard");
  app.require_subcommand(1);
  app.set_config("--config", "", "key=value file overlaid under the command-line flags");
  app.allow_config_extras(false);
  app.option_defaults()->always_capture_default(false);

  GenArgs gen;
  ExtractArgs extract;
  KdistArgs kdist;
  TuneArgs tune;
  TrainArgs train;
  ClassifyArgs classify_args;
  EvaluateArgs evaluate_args;
  add_gen(app, gen);
  add_extract(app, extract);
  add_kdist(app, kdist);
  add_tune(app, tune);
  add_train(app, train);
  add_classify(app, classify_args);
  add_evaluate(app, evaluate_args);
  for (auto* sub : app.get_subcommands({})) sub->allow_config_extras(false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "flowguard: " << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  auto log = make_logger(err);
  const CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  try {
    if (name == "gen") run_gen(gen, out);
    if (name == "extract") run_extract(extract, out, *log);
    if (name == "kdist") run_kdist(kdist, out);
    if (name == "tune") run_tune(tune, out, *log);
    if (name == "train") run_train(train, out, *log);
    if (name == "classify") run_classify(classify_args, out);
    if (name == "evaluate") run_evaluate(evaluate_args, out, err);
  } catch (const UsageError& e) {
    err << "flowguard " << name << ": " << e.what() << "\n\n" << sub->help();
    return kExitUsage;
  } catch (const Error& e) {
    return data_error(err, e.what());
  } catch (const std::exception& e) {
    return data_error(err, e.what());
  }
  log->flush();
  return kExitOk;
}

int run(int argc, const char* const* argv) { return run(argc, argv, std::cout, std::cerr); }

}  // namespace flowguard::cli
