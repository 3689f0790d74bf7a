#pragma once

// HTTP/JSON service over a pair of task models. The handlers are plain
// functions of (store, request) so they can be tested without a socket.

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "glancelab/error.hpp"
#include "glancelab/experiment.hpp"
#include "glancelab/explain.hpp"
#include "glancelab/features.hpp"
#include "glancelab/forest.hpp"
#include "glancelab/shap.hpp"

// After Eigen: <resolv.h>, pulled in by httplib, defines a `_res` macro.
#include <httplib.h>

namespace glancelab {

struct ServedModels {
  Forest classification;
  Forest regression;
  std::vector<double> feature_min;
  std::vector<double> feature_max;
  std::optional<GlobalSummary> classification_global;
  std::optional<GlobalSummary> regression_global;
  std::string version;
};

inline std::string model_version(const Forest& classification, const Forest& regression) {
  return fnv1a_hex(forest_to_json(classification).dump() + forest_to_json(regression).dump()).substr(0, 12);
}

// Ranges come from the reference (training) data; the global views explain up
// to `explain_instances` of its rows.
inline ServedModels build_served_models(Forest classification, Forest regression, const Dataset& reference,
                                        std::size_t explain_instances = 200, std::uint64_t seed = 0,
                                        unsigned threads = 1) {
  for (const Forest* f : {&classification, &regression}) {
    if (f->n_features() != kFeatureCount) {
      throw Error(ErrorCode::kDimensionMismatch, "served models must use the 25 engagement features");
    }
  }
  if (classification.task() != Task::kClassification || regression.task() != Task::kRegression) {
    throw Error(ErrorCode::kInvalidArgument, "expected one classification and one regression model");
  }
  if (reference.empty()) throw Error(ErrorCode::kEmptyDataset, "reference dataset is empty");
  ServedModels m;
  m.version = model_version(classification, regression);
  const auto x = reference.features();
  m.feature_min.assign(kFeatureCount, std::numeric_limits<double>::infinity());
  m.feature_max.assign(kFeatureCount, -std::numeric_limits<double>::infinity());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      m.feature_min[c] = std::min(m.feature_min[c], x(r, c));
      m.feature_max[c] = std::max(m.feature_max[c], x(r, c));
    }
  }
  if (explain_instances > 0) {
    const auto sample = x.select_rows(detail::explain_sample(x.rows(), explain_instances, seed));
    m.classification_global = summarize(explain_rows(classification, sample, threads), feature_name_list());
    m.regression_global = summarize(explain_rows(regression, sample, threads), feature_name_list());
  }
  m.classification = std::move(classification);
  m.regression = std::move(regression);
  return m;
}

// Readers take a snapshot; a swap replaces the pointer between requests.
class ModelStore {
 public:
  std::shared_ptr<const ServedModels> get() const {
    std::lock_guard lock(mutex_);
    return models_;
  }
  void load(ServedModels models) {
    auto next = std::make_shared<const ServedModels>(std::move(models));
    std::lock_guard lock(mutex_);
    models_ = std::move(next);
  }
  void unload() {
    std::lock_guard lock(mutex_);
    models_.reset();
  }

 private:
  mutable std::mutex mutex_;
  std::shared_ptr<const ServedModels> models_;
};

struct ServiceResponse {
  int status = 200;
  nlohmann::json body;
};

namespace detail {

inline ServiceResponse error_response(int status, std::string message,
                                      const std::vector<FieldError>& fields = {}) {
  nlohmann::json body = {{"error", std::move(message)}};
  if (!fields.empty()) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& f : fields) list.push_back({{"field", f.field}, {"message", f.message}});
    body["fields"] = std::move(list);
  }
  return {status, std::move(body)};
}

inline ServiceResponse not_loaded() { return error_response(503, "models not loaded"); }

// Accepts {"n_Button": .., ...} or {"features": {...}}. Every one of the 25
// names is required and nothing else is allowed.
inline std::vector<double> parse_feature_request(const std::string& text, std::vector<FieldError>& errors) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    errors.push_back({"body", std::string("invalid JSON: ") + e.what()});
    return {};
  }
  if (j.is_object() && j.contains("features") && j.size() == 1) j = j.at("features");
  if (!j.is_object()) {
    errors.push_back({"body", "expected a JSON object of feature values"});
    return {};
  }
  std::vector<double> values(kFeatureCount, 0.0);
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    const std::string name(kFeatureNames[i]);
    const auto it = j.find(name);
    if (it == j.end()) {
      errors.push_back({name, "missing"});
    } else if (!it->is_number()) {
      errors.push_back({name, "must be a number"});
    } else {
      values[i] = it->get<double>();
    }
  }
  for (const auto& [key, _] : j.items()) {
    if (!feature_index(key)) errors.push_back({key, "unknown field"});
  }
  if (!errors.empty()) return {};
  errors = validate_features(values);
  return values;
}

inline nlohmann::json prediction_json(const ServedModels& m, std::span<const double> x) {
  const double p = m.classification.predict(x);
  const double tgd = m.regression.predict(x);
  return {{"long_glance_probability", p},
          {"tgd_ms", static_cast<std::int64_t>(std::llround(tgd))},
          {"model_version", m.version}};
}

inline std::optional<std::pair<Task, const GlobalSummary*>> summary_for(const ServedModels& m, Task t) {
  const auto& s = t == Task::kClassification ? m.classification_global : m.regression_global;
  if (!s) return std::nullopt;
  return std::make_pair(t, &*s);
}

}  // namespace detail

inline ServiceResponse handle_predict(const ModelStore& store, const std::string& body) {
  const auto m = store.get();
  if (!m) return detail::not_loaded();
  std::vector<FieldError> errors;
  const auto x = detail::parse_feature_request(body, errors);
  if (!errors.empty()) return detail::error_response(400, "invalid feature vector", errors);
  return {200, detail::prediction_json(*m, x)};
}

inline ServiceResponse handle_explain(const ModelStore& store, const std::string& body) {
  const auto m = store.get();
  if (!m) return detail::not_loaded();
  std::vector<FieldError> errors;
  const auto x = detail::parse_feature_request(body, errors);
  if (!errors.empty()) return detail::error_response(400, "invalid feature vector", errors);
  auto out = detail::prediction_json(*m, x);
  const auto names = feature_name_list();
  out["explanations"] = {{"classification", explanation_to_json(tree_shap(m->classification, x), names)},
                         {"regression", explanation_to_json(tree_shap(m->regression, x), names)}};
  return {200, std::move(out)};
}

inline ServiceResponse handle_global(const ModelStore& store, std::size_t top_k = 19) {
  const auto m = store.get();
  if (!m) return detail::not_loaded();
  nlohmann::json out = {{"model_version", m->version}};
  for (Task t : {Task::kClassification, Task::kRegression}) {
    const auto s = detail::summary_for(*m, t);
    if (!s) continue;
    auto g = global_to_json(*s->second);
    g["beeswarm"] = beeswarm_to_json(beeswarm_data(*s->second, top_k));
    out[std::string(task_name(t))] = std::move(g);
  }
  return {200, std::move(out)};
}

inline ServiceResponse handle_dependence(const ModelStore& store, const std::string& feature) {
  const auto m = store.get();
  if (!m) return detail::not_loaded();
  const auto index = feature_index(feature);
  if (!index) return detail::error_response(404, "unknown feature '" + feature + "'");
  nlohmann::json out = {{"model_version", m->version}, {"feature", feature}};
  const auto names = feature_name_list();
  for (Task t : {Task::kClassification, Task::kRegression}) {
    const auto s = detail::summary_for(*m, t);
    if (!s || s->second->instances() < kMinDependenceInstances) continue;
    out[std::string(task_name(t))] = dependence_to_json(dependence_data(*s->second, *index), names);
  }
  return {200, std::move(out)};
}

inline ServiceResponse handle_schema(const ModelStore& store) {
  const auto m = store.get();
  if (!m) return detail::not_loaded();
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t i = 0; i < kFeatureCount; ++i) {
    features.push_back({{"name", std::string(kFeatureNames[i])},
                        {"kind", i == feature::kAcc || i == feature::kSa ? "flag" : (is_count_feature(i) ? "count" : "real")},
                        {"min", m->feature_min[i]},
                        {"max", m->feature_max[i]}});
  }
  return {200, {{"model_version", m->version}, {"features", features}}};
}

// Registers the endpoints on `server`; the caller owns listening.
inline void install_routes(httplib::Server& server, const ModelStore& store) {
  auto reply = [](httplib::Response& res, const ServiceResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server.Post("/predict", [&store, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, handle_predict(store, req.body));
  });
  server.Post("/explain", [&store, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, handle_explain(store, req.body));
  });
  server.Get("/global", [&store, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, handle_global(store));
  });
  server.Get(R"(/dependence/([^/]+))", [&store, reply](const httplib::Request& req, httplib::Response& res) {
    reply(res, handle_dependence(store, req.matches[1].str()));
  });
  server.Get("/schema", [&store, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, handle_schema(store));
  });
}

inline constexpr int kDefaultPort = 8080;

// Flag value if given, else GLANCELAB_PORT, else the default.
inline int resolve_port(std::optional<int> flag) {
  if (flag) return *flag;
  if (const char* env = std::getenv("GLANCELAB_PORT")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 0 || v > 65535) {
      throw Error(ErrorCode::kInvalidArgument, std::string("GLANCELAB_PORT is not a port: ") + env);
    }
    return static_cast<int>(v);
  }
  return kDefaultPort;
}

}  // namespace glancelab
