// glancelab command line: one subcommand per pipeline stage.

#include <csignal>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "glancelab/glancelab.hpp"

#include <CLI11.hpp>

namespace fs = std::filesystem;
using namespace glancelab;

namespace {

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kMalformedRecord, path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

void emit_json(const std::string& out_path, const nlohmann::json& j) {
  const auto text = j.dump(1) + "\n";
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    write_text(out_path, text);
  }
}

LogFormat format_or_guess(const std::string& name, const fs::path& path) {
  if (!name.empty()) return *parse_log_format(name);
  return path.extension() == ".csv" ? LogFormat::kCsv : LogFormat::kJsonl;
}

std::vector<fs::path> trip_inputs(const fs::path& input, const std::string& format) {
  if (fs::is_directory(input)) {
    auto files = list_trip_files(input, format.empty() ? LogFormat::kJsonl : *parse_log_format(format));
    if (files.empty() && format.empty()) files = list_trip_files(input, LogFormat::kCsv);
    if (files.empty()) throw Error(ErrorCode::kEmptyData, "no trip logs in " + input.string());
    return files;
  }
  return {input};
}

nlohmann::json engagement_json(const Engagement& e) {
  nlohmann::json glances = nlohmann::json::array();
  for (const auto& g : e.glances.glances) {
    glances.push_back({{"start_ms", g.start_ms}, {"end_ms", g.end_ms},
                       {"target", std::string(glance_target_name(g.target))}});
  }
  return {{"trip_id", e.trip_id},
          {"first_ms", e.interactions.first_ms()},
          {"last_ms", e.interactions.last_ms()},
          {"interactions", e.interactions.size()},
          {"driving_samples", e.driving.samples.size()},
          {"acc_active", e.driving.acc_active},
          {"sa_active", e.driving.sa_active},
          {"passenger_present", e.driving.passenger_present},
          {"glances", glances}};
}

std::vector<double> read_instance(const fs::path& path) {
  const auto j = read_json(path);
  std::vector<FieldError> errors;
  auto x = detail::parse_feature_request(j.dump(), errors);
  if (!errors.empty()) {
    std::string msg = "invalid instance";
    for (const auto& f : errors) msg += "; " + f.field + ": " + f.message;
    throw Error(ErrorCode::kInvalidArgument, msg);
  }
  return x;
}

Task parse_task_alias(const std::string& name) {
  if (name == "tgd" || name == "regression") return Task::kRegression;
  if (name == "long_glance" || name == "classification") return Task::kClassification;
  throw Error(ErrorCode::kInvalidArgument, "unknown task '" + name + "'");
}

httplib::Server* g_server = nullptr;

void stop_server(int) {
  if (g_server) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"glancelab: telemetry to engagements, models and explanations"};
  app.require_subcommand(1);
  std::uint64_t seed = 0;
  unsigned threads = 1;
  app.add_option("--seed", seed, "seed for every random draw")->capture_default_str();
  app.add_option("--threads", threads, "worker threads (results do not depend on it)")
      ->check(CLI::Range(1u, 256u))
      ->capture_default_str();

  std::string input, output, format;
  auto add_format = [&](CLI::App* cmd) {
    cmd->add_option("--format", format, "jsonl or csv (default: from extension)")
        ->check(CLI::IsMember({"jsonl", "csv"}));
  };

  auto* ingest = app.add_subcommand("ingest", "validate trip logs and print a summary");
  ingest->add_option("input", input, "trip log or directory")->required();
  ingest->add_option("--normalize", output, "write a canonical copy of a single trip here");
  add_format(ingest);

  auto* segment = app.add_subcommand("segment", "assemble engagements from trip logs");
  segment->add_option("input", input, "trip log or directory")->required();
  segment->add_option("-o,--out", output, "output file (default stdout)");
  add_format(segment);

  auto* featurize = app.add_subcommand("featurize", "build the filtered engagement dataset");
  featurize->add_option("input", input, "trip log or directory")->required();
  featurize->add_option("-o,--out", output, "dataset file")->required();
  add_format(featurize);
  bool summary = false;
  featurize->add_flag("--summary", summary, "print summary statistics");

  auto* train = app.add_subcommand("train", "fit a forest on a dataset");
  std::string task_name_arg, data_path, forest_config_path;
  train->add_option("--task", task_name_arg, "long_glance or tgd")
      ->required()
      ->check(CLI::IsMember({"long_glance", "tgd", "classification", "regression"}));
  train->add_option("--data", data_path, "dataset file")->required()->check(CLI::ExistingFile);
  train->add_option("--forest-config", forest_config_path, "forest hyperparameters (JSON)")
      ->check(CLI::ExistingFile);
  train->add_option("-o,--out", output, "model file")->required();

  auto* evaluate = app.add_subcommand("evaluate", "run an experiment and write its report");
  std::string config_path, plot_dir;
  evaluate->add_option("--config", config_path, "experiment config (JSON)")->check(CLI::ExistingFile);
  evaluate->add_option("-o,--out", output, "report file (default stdout)");
  evaluate->add_option("--emit-plot-data", plot_dir, "write force/beeswarm/dependence files here");

  auto* explain = app.add_subcommand("explain", "SHAP values for one instance");
  std::string model_path, instance_path;
  std::size_t top_k = 10;
  explain->add_option("--model", model_path, "model file")->required()->check(CLI::ExistingFile);
  explain->add_option("--instance", instance_path, "feature vector (JSON object)")
      ->required()
      ->check(CLI::ExistingFile);
  explain->add_option("--top-k", top_k, "bars in the force view")->capture_default_str();
  explain->add_option("-o,--out", output, "output file (default stdout)");

  auto* synth = app.add_subcommand("synth", "generate synthetic trip logs with ground truth");
  std::string spec_path;
  ArtifactSpec artifacts;
  synth->add_option("--spec", spec_path, "generator spec (JSON)")->check(CLI::ExistingFile);
  synth->add_option("-o,--out", output, "output directory")->required();
  synth->add_option("--tracking-losses", artifacts.tracking_losses, "artifacts per trip");
  synth->add_option("--micro-glances", artifacts.micro_glances, "artifacts per trip");
  synth->add_option("--blinks", artifacts.blinks, "artifacts per trip");
  add_format(synth);

  auto* serve = app.add_subcommand("serve", "HTTP/JSON prediction and explanation service");
  std::string cls_path, reg_path, host = "127.0.0.1";
  std::optional<int> port;
  std::size_t global_instances = 200;
  serve->add_option("--classification", cls_path, "long-glance model")->required()->check(CLI::ExistingFile);
  serve->add_option("--regression", reg_path, "TGD model")->required()->check(CLI::ExistingFile);
  serve->add_option("--data", data_path, "training dataset (ranges, global views)")
      ->required()
      ->check(CLI::ExistingFile);
  serve->add_option("--host", host)->capture_default_str();
  serve->add_option("--port", port, "default: $GLANCELAB_PORT or 8080");
  serve->add_option("--global-instances", global_instances, "rows explained for /global")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  std::string stage = app.get_subcommands().front()->get_name();
  try {
    if (*ingest) {
      nlohmann::json trips = nlohmann::json::array();
      for (const auto& file : trip_inputs(input, format)) {
        IngestDiagnostics diag;
        const auto trip = ingest_trip(file, format_or_guess(format, file), &diag);
        trips.push_back({{"file", file.string()},
                         {"trip_id", trip.trip_id},
                         {"touch", trip.touch.size()},
                         {"glances", trip.glances.size()},
                         {"driving", trip.driving.size()},
                         {"states", trip.states.size()},
                         {"duration_ms", trip_duration(trip)},
                         {"warnings", diag.warnings}});
        if (!output.empty()) write_text(output, serialize_trip(trip, format_or_guess(format, output)));
      }
      emit_json("", {{"trips", trips}});
    } else if (*segment) {
      SegmentationConfig cfg;
      nlohmann::json rows = nlohmann::json::array();
      DropStats drops;
      for (const auto& file : trip_inputs(input, format)) {
        stage = "ingest";
        auto trip = ingest_trip(file, format_or_guess(format, file));
        stage = "segment";
        trip.glances = preprocess_glances(trip.glances);
        auto assembled = assemble_engagements(trip, cfg);
        drops += assembled.drops;
        for (const auto& e : assembled.engagements) rows.push_back(engagement_json(e));
      }
      emit_json(output, {{"engagements", rows}, {"drops", drops_to_json(drops)}});
    } else if (*featurize) {
      std::vector<LabeledEngagement> rows;
      DropStats drops;
      for (const auto& file : trip_inputs(input, format)) {
        stage = "ingest";
        const auto trip = ingest_trip(file, format_or_guess(format, file));
        stage = "featurize";
        auto r = process_trip(trip);
        drops += r.drops;
        for (auto& row : r.rows) rows.push_back(std::move(row));
      }
      auto ds = filter_dataset(std::move(rows));
      ds.provenance.assembly = drops;
      save_dataset(output, ds);
      if (summary) emit_json("", summary_to_json(summary_stats(ds)));
      std::cerr << "wrote " << ds.size() << " engagements to " << output << "\n";
    } else if (*train) {
      const Task task = parse_task_alias(task_name_arg);
      stage = "load";
      const auto ds = load_dataset(data_path);
      ForestConfig cfg = task == Task::kClassification ? ForestConfig::classification_default()
                                                       : ForestConfig::regression_default();
      if (!forest_config_path.empty()) cfg = forest_config_from_json(read_json(forest_config_path), cfg);
      cfg.seed = seed;
      stage = "train";
      Forest forest;
      if (task == Task::kClassification) {
        const auto balanced = balance_undersample(ds, seed);
        forest = fit_forest(balanced.features(), balanced.long_glance_targets(), task, cfg,
                            feature_name_list(), threads);
      } else {
        forest = fit_forest(ds.features(), ds.tgd_targets(), task, cfg, feature_name_list(), threads);
      }
      save_forest(output, forest);
    } else if (*evaluate) {
      ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{}
                                                 : experiment_config_from_json(read_json(config_path));
      if (app.get_option("--seed")->count() > 0) cfg.seed = seed;
      cfg.threads = threads;
      stage = "experiment";
      const auto result = run_experiment(cfg);
      emit_json(output, result.report);
      if (!plot_dir.empty()) {
        stage = "plot-data";
        for (const auto& p : emit_plot_data(result, cfg, plot_dir)) std::cerr << "wrote " << p.string() << "\n";
      }
    } else if (*explain) {
      stage = "load";
      const auto forest = load_forest(model_path);
      const auto x = read_instance(instance_path);
      stage = "explain";
      const auto e = tree_shap(forest, x);
      auto j = explanation_to_json(e, feature_name_list());
      j["task"] = std::string(task_name(forest.task()));
      j["force"] = force_to_json(force_data(e, top_k), feature_name_list());
      emit_json(output, j);
    } else if (*synth) {
      const GeneratorSpec spec = spec_path.empty() ? GeneratorSpec{} : generator_spec_from_json(read_json(spec_path));
      const LogFormat fmt = format.empty() ? LogFormat::kJsonl : *parse_log_format(format);
      const std::string ext = fmt == LogFormat::kJsonl ? ".jsonl" : ".csv";
      fs::create_directories(output);
      nlohmann::json truth = nlohmann::json::array();
      const auto corpus = generate_corpus(spec, seed);
      for (std::size_t i = 0; i < corpus.size(); ++i) {
        TripLog trip = corpus[i].trip;
        if (artifacts.tracking_losses + artifacts.micro_glances + artifacts.blinks > 0) {
          trip = inject_artifacts(trip, artifacts, detail::derive_seed(seed ^ 0xa57eULL, i)).trip;
        }
        write_trip(fs::path(output) / (trip.trip_id + ext), trip, fmt);
        for (const auto& t : corpus[i].truth) truth.push_back(truth_to_json(t));
      }
      write_text(fs::path(output) / "truth.json", nlohmann::json{{"seed", seed},
                                                                   {"spec", generator_spec_to_json(spec)},
                                                                   {"sessions", truth}}
                                                        .dump(1) + "\n");
      std::cerr << "wrote " << corpus.size() << " trips to " << output << "\n";
    } else if (*serve) {
      stage = "load";
      ModelStore store;
      store.load(build_served_models(load_forest(cls_path), load_forest(reg_path), load_dataset(data_path),
                                     global_instances, seed, threads));
      stage = "serve";
      httplib::Server server;
      install_routes(server, store);
      const int p = resolve_port(port);
      if (!server.bind_to_port(host, p)) throw Error(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(p));
      g_server = &server;
      std::signal(SIGINT, stop_server);
      std::signal(SIGTERM, stop_server);
      std::cerr << "listening on http://" << host << ":" << p << " (model " << store.get()->version << ")\n";
      server.listen_after_bind();
    }
  } catch (const Error& e) {
    std::cerr << "[" << stage << "] " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "[" << stage << "] MalformedRecord: " << e.what() << "\n";
    return 1;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "[" << stage << "] Io: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
