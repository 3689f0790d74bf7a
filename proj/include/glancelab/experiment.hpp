#pragma once

// End-to-end experiments: data -> engagements -> cross-validated models ->
// explanations, reported as a deterministic JSON document.

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "glancelab/error.hpp"
#include "glancelab/explain.hpp"
#include "glancelab/features.hpp"
#include "glancelab/forest.hpp"
#include "glancelab/linear.hpp"
#include "glancelab/shap.hpp"
#include "glancelab/synthgen.hpp"
#include "glancelab/telemetry.hpp"
#include "glancelab/validation.hpp"

namespace glancelab {

inline constexpr int kReportSchemaVersion = 1;

inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

enum class DataSource { kSynthetic, kLogs, kDataset };

struct ExperimentConfig {
  std::uint64_t seed = 0;
  DataSource source = DataSource::kSynthetic;
  GeneratorSpec generator;
  std::filesystem::path logs_dir;
  LogFormat log_format = LogFormat::kJsonl;
  std::filesystem::path dataset_path;
  PipelineConfig pipeline;
  DatasetFilterConfig filter;
  int cv_folds = 10;
  int regression_repetitions = 3;
  int classification_repetitions = 1;
  bool run_classification = true;
  bool run_regression = true;
  ForestConfig classification_forest = ForestConfig::classification_default();
  ForestConfig regression_forest = ForestConfig::regression_default();
  std::size_t explain_instances = 200;
  std::size_t beeswarm_top_k = 19;
  std::size_t force_top_k = 10;
  unsigned threads = 1;
};

inline ExperimentConfig experiment_config_from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    if (j.contains("data")) {
      const auto& d = j.at("data");
      const auto source = d.value("source", std::string("synthetic"));
      if (source == "synthetic") {
        c.source = DataSource::kSynthetic;
        if (d.contains("generator")) c.generator = generator_spec_from_json(d.at("generator"));
      } else if (source == "logs") {
        c.source = DataSource::kLogs;
        c.logs_dir = d.at("dir").get<std::string>();
        const auto fmt = parse_log_format(d.value("format", std::string("jsonl")));
        if (!fmt) throw Error(ErrorCode::kInvalidArgument, "data.format must be jsonl or csv");
        c.log_format = *fmt;
      } else if (source == "dataset") {
        c.source = DataSource::kDataset;
        c.dataset_path = d.at("path").get<std::string>();
      } else {
        throw Error(ErrorCode::kInvalidArgument, "data.source must be synthetic, logs or dataset");
      }
    }
    if (j.contains("pipeline")) {
      const auto& p = j.at("pipeline");
      auto& s = c.pipeline.segmentation;
      s.max_gap_ms = p.value("max_gap_ms", s.max_gap_ms);
      s.buffer_ms = p.value("buffer_ms", s.buffer_ms);
      s.sampling_tolerance_ms = p.value("sampling_tolerance_ms", s.sampling_tolerance_ms);
      c.pipeline.long_glance_threshold_ms = p.value("long_glance_ms", c.pipeline.long_glance_threshold_ms);
      c.pipeline.features.drag_threshold_px = p.value("drag_threshold_px", c.pipeline.features.drag_threshold_px);
    }
    if (j.contains("filter")) {
      const auto& f = j.at("filter");
      c.filter.max_interactions = f.value("max_interactions", c.filter.max_interactions);
      c.filter.full_stop_kmh = f.value("full_stop_kmh", c.filter.full_stop_kmh);
    }
    if (j.contains("cv")) {
      const auto& v = j.at("cv");
      c.cv_folds = v.value("folds", c.cv_folds);
      c.regression_repetitions = v.value("regression_repetitions", c.regression_repetitions);
      c.classification_repetitions = v.value("classification_repetitions", c.classification_repetitions);
    }
    if (j.contains("tasks")) {
      c.run_classification = c.run_regression = false;
      for (const auto& t : j.at("tasks")) {
        const auto task = parse_task(t.get<std::string>());
        (task == Task::kClassification ? c.run_classification : c.run_regression) = true;
      }
    }
    if (j.contains("classification_forest")) {
      c.classification_forest = forest_config_from_json(j.at("classification_forest"), c.classification_forest);
    }
    if (j.contains("regression_forest")) {
      c.regression_forest = forest_config_from_json(j.at("regression_forest"), c.regression_forest);
    }
    if (j.contains("explain")) {
      const auto& e = j.at("explain");
      c.explain_instances = e.value("instances", c.explain_instances);
      c.beeswarm_top_k = e.value("top_k", c.beeswarm_top_k);
      c.force_top_k = e.value("force_top_k", c.force_top_k);
    }
    c.threads = j.value("threads", c.threads);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kInvalidArgument, std::string("experiment config: ") + e.what());
  }
  return c;
}

// Canonical form used for the config hash. Threads are excluded: they never
// change results.
inline nlohmann::json experiment_config_to_json(const ExperimentConfig& c) {
  nlohmann::json data;
  switch (c.source) {
    case DataSource::kSynthetic:
      data = {{"source", "synthetic"}, {"generator", generator_spec_to_json(c.generator)}};
      break;
    case DataSource::kLogs:
      data = {{"source", "logs"}, {"dir", c.logs_dir.string()},
              {"format", c.log_format == LogFormat::kJsonl ? "jsonl" : "csv"}};
      break;
    case DataSource::kDataset:
      data = {{"source", "dataset"}, {"path", c.dataset_path.string()}};
      break;
  }
  nlohmann::json tasks = nlohmann::json::array();
  if (c.run_classification) tasks.push_back("classification");
  if (c.run_regression) tasks.push_back("regression");
  const auto& s = c.pipeline.segmentation;
  return {{"seed", c.seed},
          {"data", data},
          {"pipeline",
           {{"max_gap_ms", s.max_gap_ms}, {"buffer_ms", s.buffer_ms},
            {"sampling_tolerance_ms", s.sampling_tolerance_ms},
            {"long_glance_ms", c.pipeline.long_glance_threshold_ms},
            {"drag_threshold_px", c.pipeline.features.drag_threshold_px}}},
          {"filter", {{"max_interactions", c.filter.max_interactions}, {"full_stop_kmh", c.filter.full_stop_kmh}}},
          {"cv",
           {{"folds", c.cv_folds}, {"regression_repetitions", c.regression_repetitions},
            {"classification_repetitions", c.classification_repetitions}}},
          {"tasks", tasks},
          {"classification_forest", forest_config_to_json(c.classification_forest)},
          {"regression_forest", forest_config_to_json(c.regression_forest)},
          {"explain",
           {{"instances", c.explain_instances}, {"top_k", c.beeswarm_top_k}, {"force_top_k", c.force_top_k}}}};
}

// Trip files (*.jsonl / *.csv) in a directory, in file-name order.
inline std::vector<std::filesystem::path> list_trip_files(const std::filesystem::path& dir,
                                                          LogFormat format) {
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::kIo, "not a directory: " + dir.string());
  const std::string ext = format == LogFormat::kJsonl ? ".jsonl" : ".csv";
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ext) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  return files;
}

inline Dataset build_dataset_from_logs(const std::filesystem::path& dir, LogFormat format,
                                       const PipelineConfig& pipeline,
                                       const DatasetFilterConfig& filter) {
  std::vector<LabeledEngagement> rows;
  DropStats drops;
  for (const auto& file : list_trip_files(dir, format)) {
    auto result = process_trip(ingest_trip(file, format), pipeline);
    drops += result.drops;
    for (auto& r : result.rows) rows.push_back(std::move(r));
  }
  auto ds = filter_dataset(std::move(rows), filter);
  ds.provenance.assembly = drops;
  return ds;
}

inline Dataset load_experiment_data(const ExperimentConfig& c) {
  switch (c.source) {
    case DataSource::kSynthetic:
      return synthesize_dataset(c.generator, c.seed, c.pipeline, c.filter);
    case DataSource::kLogs:
      return build_dataset_from_logs(c.logs_dir, c.log_format, c.pipeline, c.filter);
    case DataSource::kDataset:
      return load_dataset(c.dataset_path);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown data source");
}

struct ModelResult {
  std::string name;
  MetricsReport metrics;
};

struct TaskResult {
  Task task = Task::kRegression;
  std::size_t rows = 0;
  std::vector<ModelResult> models;
  Forest forest;  // fitted on the task's full data
  std::vector<Explanation> explanations;
  std::optional<GlobalSummary> summary;
};

struct ExperimentResult {
  nlohmann::json report;
  std::optional<TaskResult> classification;
  std::optional<TaskResult> regression;
  Dataset dataset;
};

struct RankingRow {
  std::size_t rank = 0;
  std::string name;
  double mean = 0.0;
  double std = 0.0;
};

// Models sorted by mean CV score (accuracy descending, MAE ascending); equal
// means keep name order.
inline std::vector<RankingRow> compare_models(const std::vector<ModelResult>& models) {
  if (models.size() < 2) {
    throw Error(ErrorCode::kInvalidArgument, "comparison needs at least two models");
  }
  std::vector<ModelResult> sorted = models;
  std::sort(sorted.begin(), sorted.end(), [](const ModelResult& a, const ModelResult& b) {
    if (a.metrics.mean != b.metrics.mean) {
      return higher_is_better(a.metrics.kind) ? a.metrics.mean > b.metrics.mean
                                              : a.metrics.mean < b.metrics.mean;
    }
    return a.name < b.name;
  });
  std::vector<RankingRow> out;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    out.push_back({i + 1, sorted[i].name, sorted[i].metrics.mean, sorted[i].metrics.std});
  }
  return out;
}

inline std::vector<RankingRow> compare_models(const nlohmann::json& task_report) {
  std::vector<ModelResult> models;
  for (const auto& m : task_report.at("models")) {
    const auto& metrics = m.at("metrics");
    const auto kind = metrics.at("metric").get<std::string>() == "accuracy" ? MetricKind::kAccuracy
                                                                             : MetricKind::kMaeMs;
    models.push_back({m.at("name").get<std::string>(),
                      MetricsReport::from_scores(kind, metrics.at("folds").get<std::vector<double>>())});
  }
  return compare_models(models);
}

inline nlohmann::json ranking_to_json(const std::vector<RankingRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    out.push_back({{"rank", r.rank}, {"model", r.name}, {"mean", r.mean}, {"std", r.std}});
  }
  return out;
}

namespace detail {

inline Trainer coin_trainer() {
  return [](const FeatureMatrix&, std::span<const double>, std::uint64_t seed) -> Predictor {
    return [seed](const FeatureMatrix& test) {
      CoinBaseline coin(seed);
      std::vector<double> out;
      for (std::size_t r = 0; r < test.rows(); ++r) out.push_back(coin.predict_label());
      return out;
    };
  };
}

inline Trainer median_trainer() {
  return [](const FeatureMatrix&, std::span<const double> y, std::uint64_t) -> Predictor {
    const double m = MedianBaseline::fit(y).value;
    return [m](const FeatureMatrix& test) { return std::vector<double>(test.rows(), m); };
  };
}

inline Trainer logistic_trainer() {
  return [](const FeatureMatrix& x, std::span<const double> y, std::uint64_t) -> Predictor {
    auto model = std::make_shared<LogisticModel>(fit_logistic(x, y));
    return [model](const FeatureMatrix& test) {
      std::vector<double> out;
      for (std::size_t r = 0; r < test.rows(); ++r) out.push_back(model->predict(test.row(r)));
      return out;
    };
  };
}

inline Trainer linear_trainer() {
  return [](const FeatureMatrix& x, std::span<const double> y, std::uint64_t) -> Predictor {
    auto model = std::make_shared<LinearModel>(fit_linear(x, y));
    return [model](const FeatureMatrix& test) {
      std::vector<double> out;
      for (std::size_t r = 0; r < test.rows(); ++r) out.push_back(model->predict(test.row(r)));
      return out;
    };
  };
}

// Rows to explain: the first `limit` rows of a seeded permutation, in
// ascending row order.
inline std::vector<std::size_t> explain_sample(std::size_t rows, std::size_t limit, std::uint64_t seed) {
  std::vector<std::size_t> idx(rows);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (limit < rows) {
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(limit);
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}

inline TaskResult run_task(Task task, const FeatureMatrix& x, std::span<const double> y,
                           const ExperimentConfig& c) {
  TaskResult result;
  result.task = task;
  result.rows = x.rows();
  const bool cls = task == Task::kClassification;
  CvConfig cv;
  cv.folds = c.cv_folds;
  cv.scheme = cls ? CvScheme::kStratified10Fold : CvScheme::kRepeated10Fold;
  cv.repetitions = cls ? c.classification_repetitions : c.regression_repetitions;
  cv.seed = derive_seed(c.seed, cls ? 11 : 12);
  const MetricKind metric = cls ? MetricKind::kAccuracy : MetricKind::kMaeMs;
  const ForestConfig forest_config = cls ? c.classification_forest : c.regression_forest;

  result.models.push_back({"Baseline", cross_validate(x, y, cls ? coin_trainer() : median_trainer(), metric, cv)});
  result.models.push_back({cls ? "LogisticRegression" : "LinearRegression",
                           cross_validate(x, y, cls ? logistic_trainer() : linear_trainer(), metric, cv)});
  result.models.push_back(
      {"RandomForest", cross_validate(x, y, forest_trainer(task, forest_config, c.threads), metric, cv)});

  auto final_config = forest_config;
  final_config.seed = derive_seed(c.seed, cls ? 21 : 22);
  result.forest = fit_forest(x, y, task, final_config, feature_name_list(), c.threads);

  if (c.explain_instances > 0) {
    const auto rows = explain_sample(x.rows(), c.explain_instances, derive_seed(c.seed, cls ? 31 : 32));
    result.explanations = explain_rows(result.forest, x.select_rows(rows), c.threads);
    result.summary = summarize(result.explanations, feature_name_list());
  }
  return result;
}

inline nlohmann::json task_to_json(const TaskResult& t, const ExperimentConfig& c) {
  nlohmann::json models = nlohmann::json::array();
  for (const auto& m : t.models) models.push_back({{"name", m.name}, {"metrics", metrics_to_json(m.metrics)}});
  nlohmann::json out = {{"task", task_name(t.task)},
                        {"rows", t.rows},
                        {"models", models},
                        {"ranking", ranking_to_json(compare_models(t.models))},
                        {"model_hash", fnv1a_hex(forest_to_json(t.forest).dump())}};
  if (t.summary) {
    out["explanations"] = {{"global", global_to_json(*t.summary)},
                           {"beeswarm_rows", std::min(c.beeswarm_top_k, t.summary->ranking.size())},
                           {"explanation_hash", fnv1a_hex([&] {
                              nlohmann::json all = nlohmann::json::array();
                              for (const auto& e : t.explanations) all.push_back(explanation_to_json(e, feature_name_list()));
                              return all.dump();
                            }())}};
  }
  return out;
}

}  // namespace detail

inline ExperimentResult run_experiment(const ExperimentConfig& c) {
  ExperimentResult result;
  result.dataset = load_experiment_data(c);
  if (result.dataset.empty()) throw Error(ErrorCode::kEmptyDataset, "no engagements survived the pipeline");
  const auto& ds = result.dataset;

  const auto config_json = experiment_config_to_json(c);
  nlohmann::json report = {{"schema_version", kReportSchemaVersion},
                           {"seed", c.seed},
                           {"config", config_json},
                           {"config_hash", fnv1a_hex(config_json.dump())},
                           {"data_hash", fnv1a_hex(dataset_to_json(ds).dump())}};
  const auto& p = ds.provenance;
  report["dataset"] = {{"rows", ds.size()},
                       {"provenance",
                        {{"input_rows", p.input_rows},
                         {"dropped_too_many_interactions", p.dropped_too_many_interactions},
                         {"dropped_passenger", p.dropped_passenger},
                         {"dropped_full_stop", p.dropped_full_stop},
                         {"assembly", drops_to_json(p.assembly)}}},
                       {"summary", summary_to_json(summary_stats(ds))}};

  nlohmann::json tasks = nlohmann::json::object();
  if (c.run_classification) {
    const auto balanced = balance_undersample(ds, detail::derive_seed(c.seed, 1));
    const auto x = balanced.features();
    const auto y = balanced.long_glance_targets();
    result.classification = detail::run_task(Task::kClassification, x, y, c);
    auto t = detail::task_to_json(*result.classification, c);
    t["balanced_rows"] = balanced.size();
    t["dropped_by_balancing"] = balanced.provenance.dropped_by_balancing;
    tasks["classification"] = std::move(t);
  }
  if (c.run_regression) {
    const auto x = ds.features();
    const auto y = ds.tgd_targets();
    result.regression = detail::run_task(Task::kRegression, x, y, c);
    tasks["regression"] = detail::task_to_json(*result.regression, c);
  }
  report["tasks"] = std::move(tasks);
  report["report_hash"] = fnv1a_hex(report.dump());
  result.report = std::move(report);
  return result;
}

// Writes force / beeswarm / dependence plot data for each explained task.
inline std::vector<std::filesystem::path> emit_plot_data(const ExperimentResult& r,
                                                         const ExperimentConfig& c,
                                                         const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::vector<std::filesystem::path> written;
  const auto names = feature_name_list();
  auto write = [&](const std::filesystem::path& path, const nlohmann::json& j) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
    out << j.dump(1) << "\n";
    written.push_back(path);
  };
  for (const auto* t : {r.classification ? &*r.classification : nullptr,
                        r.regression ? &*r.regression : nullptr}) {
    if (!t || !t->summary) continue;
    const std::string tag(task_name(t->task));
    nlohmann::json force = nlohmann::json::array();
    for (const auto& e : t->explanations) force.push_back(force_to_json(force_data(e, c.force_top_k), names));
    write(dir / ("force_" + tag + ".json"), force);
    write(dir / ("beeswarm_" + tag + ".json"), beeswarm_to_json(beeswarm_data(*t->summary, c.beeswarm_top_k)));
    if (t->summary->instances() >= kMinDependenceInstances) {
      nlohmann::json dep = nlohmann::json::object();
      for (std::size_t f = 0; f < names.size(); ++f) {
        dep[names[f]] = dependence_to_json(dependence_data(*t->summary, f), names);
      }
      write(dir / ("dependence_" + tag + ".json"), dep);
    }
  }
  return written;
}

}  // namespace glancelab
