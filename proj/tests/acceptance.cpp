// Acceptance run: one PASS/FAIL line per criterion, non-zero exit on failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>

#include "glancelab/glancelab.hpp"
#include "test_util.hpp"

namespace glancelab {
namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// Ranks with ties averaged.
std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
  const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// ---------------------------------------------------------------------------

Outcome shap_exactness() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1001);
  double worst = 0.0;
  for (int f = 0; f < 100; ++f) {
    // The first forest is the largest allowed shape.
    const int m = f == 0 ? 12 : 1 + static_cast<int>(rng() % 12);
    const int trees = f == 0 ? 30 : 1 + static_cast<int>(rng() % 30);
    const int depth = f == 0 ? 4 : 1 + static_cast<int>(rng() % 4);
    const auto forest = testing::random_forest(rng, m, trees, depth);
    for (int i = 0; i < 100; ++i) {
      const auto x = testing::random_instance(rng, m);
      const auto fast = tree_shap(forest, x);
      const auto slow = brute_force_shap(forest, x);
      for (int k = 0; k < m; ++k) worst = std::max(worst, std::abs(fast.phi[k] - slow.phi[k]));
      worst = std::max(worst, std::abs(fast.base_value - slow.base_value));
    }
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 60.0, fmt("max |tree - brute| = %.3g over 10000 instances, %.1f s", worst, secs)};
}

struct Models {
  Dataset data;  // sigma = 500
  Forest classification;
  Forest regression;
};

GeneratorSpec noisy_spec(int sessions) {
  GeneratorSpec spec;
  spec.sessions_per_trip = 20;
  spec.trips = sessions / spec.sessions_per_trip;
  spec.effects.sigma_ms = 500.0;
  return spec;
}

ForestConfig acceptance_forest(Task task) {
  ForestConfig c = ForestConfig::defaults(task);
  c.n_estimators = 50;
  return c;
}

const Models& models() {
  static const Models m = [] {
    Models out;
    out.data = synthesize_dataset(noisy_spec(5000), 2024);
    const auto balanced = balance_undersample(out.data, 7);
    auto cc = acceptance_forest(Task::kClassification);
    cc.seed = 1;
    out.classification = fit_forest(balanced.features(), balanced.long_glance_targets(), Task::kClassification, cc,
                                    feature_name_list());
    auto rc = acceptance_forest(Task::kRegression);
    rc.seed = 2;
    out.regression =
        fit_forest(out.data.features(), out.data.tgd_targets(), Task::kRegression, rc, feature_name_list());
    return out;
  }();
  return m;
}

std::set<int> split_features(const Forest& f) {
  std::set<int> used;
  for (const auto& t : f.trees()) {
    for (const auto& n : t.nodes) {
      if (!n.is_leaf()) used.insert(n.feature);
    }
  }
  return used;
}

Outcome local_accuracy() {
  const auto& m = models();
  const auto x = m.data.features();
  std::vector<double> lo(kFeatureCount, 1e300), hi(kFeatureCount, -1e300);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      lo[c] = std::min(lo[c], x(r, c));
      hi[c] = std::max(hi[c], x(r, c));
    }
  }
  // A third model with two columns held constant, so missingness is checked
  // on features that certainly never split.
  auto flat = x;
  std::vector<double> y = m.data.tgd_targets();
  std::vector<double> values(flat.rows() * kFeatureCount);
  for (std::size_t r = 0; r < flat.rows(); ++r) {
    for (std::size_t c = 0; c < kFeatureCount; ++c) {
      values[r * kFeatureCount + c] = (c == feature::kDistance || c == feature::kSteering) ? 0.0 : flat(r, c);
    }
  }
  auto fc = acceptance_forest(Task::kRegression);
  fc.n_estimators = 20;
  const auto masked =
      fit_forest(FeatureMatrix(flat.rows(), kFeatureCount, values), y, Task::kRegression, fc, feature_name_list());

  std::mt19937_64 rng(77);
  double worst = 0.0;
  std::size_t zero_checks = 0, violations = 0;
  const Forest* forests[] = {&m.classification, &m.regression, &masked};
  const std::size_t counts[] = {400, 400, 200};
  for (int k = 0; k < 3; ++k) {
    const auto used = split_features(*forests[k]);
    for (std::size_t i = 0; i < counts[k]; ++i) {
      std::vector<double> v(kFeatureCount);
      for (std::size_t c = 0; c < kFeatureCount; ++c) {
        v[c] = std::uniform_real_distribution<double>(lo[c], hi[c] + 1e-9)(rng);
        if (is_count_feature(c)) v[c] = std::floor(v[c]);
      }
      const auto e = tree_shap(*forests[k], v);
      worst = std::max(worst, std::abs(e.reconstructed() - forests[k]->predict(v)));
      for (std::size_t c = 0; c < kFeatureCount; ++c) {
        if (!used.count(static_cast<int>(c))) {
          ++zero_checks;
          violations += e.phi[c] != 0.0;
        }
      }
    }
  }
  const bool masked_ok = !split_features(masked).count(feature::kDistance) && !split_features(masked).count(feature::kSteering);
  return {worst < 1e-9 && violations == 0 && zero_checks > 0 && masked_ok,
          fmt("max |phi0 + sum phi - f(x)| = %.3g over 1000 instances; %zu never-split phi checks, %zu non-zero",
              worst, zero_checks, violations)};
}

Outcome filter_suite() {
  std::mt19937_64 rng(3003);
  const GlanceFilterConfig c;
  std::size_t failures = 0;
  std::string first;
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<RawGlanceSegment> in;
    Millis t = static_cast<Millis>(rng() % 1000);
    const int n = 1 + static_cast<int>(rng() % 60);
    for (int i = 0; i < n; ++i) {
      const auto target = static_cast<GlanceTarget>(rng() % kGlanceTargetCount);
      const Millis d = 1 + static_cast<Millis>(rng() % (rng() % 3 == 0 ? 3000 : 600));
      in.push_back({t, t + d, target});
      t += d;
    }
    const auto out = filter_glances(in, c);
    auto fail = [&](const char* why) {
      if (failures++ == 0) first = fmt("trial %d: %s", trial, why);
    };
    if (filter_glances(out, c) != out) fail("not idempotent");
    if (out.empty() || out.front().start_ms != in.front().start_ms || out.back().end_ms != in.back().end_ms) {
      fail("timeline not conserved");
      continue;
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (i > 0 && out[i].start_ms != out[i - 1].end_ms) fail("gap or overlap");
      if (out.size() == 1) break;
      const Millis d = out[i].duration();
      const auto tgt = out[i].target;
      if (d < c.min_glance_ms) fail("segment < 120 ms");
      if (tgt == GlanceTarget::kEyesClosed && d < c.blink_ms) fail("blink < 500 ms");
      if (tgt == GlanceTarget::kTrackingLoss && i > 0 && i + 1 < out.size() &&
          out[i - 1].target == out[i + 1].target && d < c.tracking_loss_same_aoi_ms) {
        fail("same-AOI tracking loss < 300 ms");
      }
    }
  }
  return {failures == 0, failures == 0 ? "10000 streams: idempotent, no short segments, duration conserved"
                                       : fmt("%zu violations; %s", failures, first.c_str())};
}

Outcome segmentation_oracle() {
  std::mt19937_64 rng(4004);
  std::size_t failures = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<TouchEvent> touch;
    Millis now = 0;
    const int n = 1 + static_cast<int>(rng() % 60);
    for (int i = 0; i < n; ++i) {
      now += static_cast<Millis>(rng() % 25000);
      touch.push_back({now, "e", ElementType::kButton, {{{0, 0}, {0, 0}}}});
    }
    std::vector<RawGlanceSegment> glances;
    Millis g = 0;
    while (g <= now + 5000) {
      const Millis d = 1 + static_cast<Millis>(rng() % 4000);
      glances.push_back({g, g + d, static_cast<GlanceTarget>(rng() % 5)});
      g += d;
    }
    const Millis bound = static_cast<Millis>(rng() % 20000);
    const auto seqs = segment_interactions(touch, bound);

    // Brute force: a new sequence starts exactly where the gap exceeds the bound.
    std::vector<std::size_t> want_starts{0};
    for (std::size_t i = 1; i < touch.size(); ++i) {
      if (touch[i].timestamp - touch[i - 1].timestamp > bound) want_starts.push_back(i);
    }
    std::vector<std::size_t> got_starts;
    std::size_t pos = 0;
    for (const auto& s : seqs) {
      got_starts.push_back(pos);
      for (const auto& e : s.interactions) {
        if (!(pos < touch.size() && e == touch[pos])) ++failures;
        ++pos;
      }
    }
    if (got_starts != want_starts || pos != touch.size()) ++failures;

    for (const auto& s : seqs) {
      const Millis first = s.first_ms(), last = s.last_ms();
      std::vector<RawGlanceSegment> want;
      for (const auto& seg : glances) {
        const bool start_in = first <= seg.start_ms && seg.start_ms <= last;
        const bool end_in = first <= seg.end_ms && seg.end_ms <= last;
        const bool spans = seg.start_ms < first && seg.end_ms > last;
        if (start_in || end_in || spans) want.push_back(seg);
      }
      if (attach_glances(glances, s).glances != want) ++failures;
    }

    // A larger bound only merges: never more sequences, boundaries are a subset.
    const Millis bigger = bound + static_cast<Millis>(rng() % 10000);
    const auto coarse = segment_interactions(touch, bigger);
    if (coarse.size() > seqs.size()) ++failures;
    std::set<Millis> fine_firsts;
    for (const auto& s : seqs) fine_firsts.insert(s.first_ms());
    for (const auto& s : coarse) failures += fine_firsts.count(s.first_ms()) ? 0 : 1;
  }
  return {failures == 0, fmt("10000 trips, %zu mismatches against brute-force scans", failures)};
}

struct Recovery {
  bool exact = false;
  std::size_t exact_sessions = 0;
  double rf_mae = 0, baseline_mae = 0, rho = 0;
  std::size_t rows = 0;
  GlobalSummary summary;
};

Millis oracle_tgd(const PlantedEffects& e, const FeatureVector& f) {
  const double v = e.intercept_ms + e.alpha_n * f.n + e.beta_v * f.v_avg +
                   e.gamma_list * f.count(ElementType::kList) + e.delta_home * f.count(ElementType::kHomebar);
  return std::max<Millis>(e.min_tgd_ms, std::llround(v));
}

const Recovery& recovery() {
  static const Recovery r = [] {
    Recovery out;
    // sigma = 0: every session, closed form against pipeline output.
    auto spec = noisy_spec(2000);
    spec.effects.sigma_ms = 0.0;
    std::size_t bad = 0;
    for (const auto& trip : generate_corpus(spec, 55)) {
      const auto rows = process_trip(trip.trip).rows;
      bad += rows.size() != trip.truth.size();
      for (const auto& row : rows) {
        bad += std::llabs(row.tgd_ms - oracle_tgd(spec.effects, row.features)) > 1;
        ++out.exact_sessions;
      }
    }
    out.exact = bad == 0 && out.exact_sessions == 2000;

    // sigma = 500 ms, 5000 sessions.
    const auto& m = models();
    const auto x = m.data.features();
    const auto y = m.data.tgd_targets();
    out.rows = x.rows();
    CvConfig cv{CvScheme::kRepeated10Fold, 10, 1, 99};
    out.rf_mae = cross_validate(x, y, forest_trainer(Task::kRegression, acceptance_forest(Task::kRegression)),
                                MetricKind::kMaeMs, cv)
                     .mean;
    out.baseline_mae = cross_validate(x, y, detail::median_trainer(), MetricKind::kMaeMs, cv).mean;

    const auto rows = detail::explain_sample(x.rows(), 1000, 5);
    out.summary = summarize(explain_rows(m.regression, x.select_rows(rows)), feature_name_list());
    std::map<double, std::pair<double, int>> by_n;
    for (std::size_t i = 0; i < out.summary.instances(); ++i) {
      auto& slot = by_n[out.summary.values[i][feature::kCount]];
      slot.first += out.summary.phi[i][feature::kCount];
      slot.second += 1;
    }
    std::vector<double> ns, means;
    for (const auto& [n, s] : by_n) {
      ns.push_back(n);
      means.push_back(s.first / s.second);
    }
    out.rho = spearman(ns, means);
    return out;
  }();
  return r;
}

Outcome planted_recovery() {
  const auto& r = recovery();
  const double gain = 1.0 - r.rf_mae / r.baseline_mae;
  return {r.exact && r.rf_mae <= 750.0 && gain >= 0.20 && r.rho >= 0.9,
          fmt("sigma=0: %zu sessions %s; sigma=500: %zu rows, RF MAE %.1f ms vs median %.1f ms (%.1f%% better); "
              "Spearman(N, mean phi_N) = %.3f",
              r.exact_sessions, r.exact ? "exact within 1 ms" : "MISMATCH", r.rows, r.rf_mae, r.baseline_mae,
              100.0 * gain, r.rho)};
}

Outcome directional_recovery() {
  const auto& s = recovery().summary;
  auto mean_where = [&](std::size_t f) {
    double sum = 0;
    int n = 0;
    for (std::size_t i = 0; i < s.instances(); ++i) {
      if (s.values[i][f] >= 1.0) {
        sum += s.phi[i][f];
        ++n;
      }
    }
    return std::make_pair(n ? sum / n : 0.0, n);
  };
  const auto [list, nl] = mean_where(feature::element(ElementType::kList));
  const auto [home, nh] = mean_where(feature::element(ElementType::kHomebar));
  return {nl > 0 && nh > 0 && list > 0.0 && home < 0.0,
          fmt("mean phi(n_List) = %+.1f ms over %d rows; mean phi(n_Homebar) = %+.1f ms over %d rows", list, nl,
              home, nh)};
}

Outcome protocol_checks() {
  const auto& data = models().data;
  const auto balanced = balance_undersample(data, 7);
  std::size_t pos = 0;
  for (const auto& r : balanced.rows) pos += r.long_glance;
  const bool equal = 2 * pos == balanced.size();

  const auto xb = balanced.features();
  const auto yb = balanced.long_glance_targets();
  const auto coin = cross_validate(xb, yb, detail::coin_trainer(), MetricKind::kAccuracy,
                                   {CvScheme::kStratified10Fold, 10, 1, 12});
  const bool coin_ok = coin.mean >= 0.47 && coin.mean <= 0.53;

  // Median baseline against a direct computation on the same folds.
  const auto x = data.features();
  const auto y = data.tgd_targets();
  const CvConfig cv{CvScheme::kRepeated10Fold, 10, 3, 13};
  const auto report = cross_validate(x, y, detail::median_trainer(), MetricKind::kMaeMs, cv);
  const auto folds = make_folds(y, cv);
  double worst = 0.0;
  for (std::size_t f = 0; f < folds.size(); ++f) {
    std::vector<char> test(y.size(), 0);
    for (auto i : folds[f]) test[i] = 1;
    std::vector<double> train;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (!test[i]) train.push_back(y[i]);
    }
    std::sort(train.begin(), train.end());
    const std::size_t n = train.size();
    const double med = n % 2 ? train[n / 2] : (train[n / 2 - 1] + train[n / 2]) / 2.0;
    double dev = 0.0;
    for (auto i : folds[f]) dev += std::abs(y[i] - med);
    dev /= static_cast<double>(folds[f].size());
    worst = std::max(worst, std::abs(dev - report.fold_scores[f]));
  }
  const bool median_ok = worst <= 1e-9 && folds.size() == report.fold_scores.size();
  return {equal && coin_ok && median_ok,
          fmt("balanced %zu/%zu; coin accuracy %.4f (stratified 10-fold, %zu rows); median MAE max diff %.3g over %zu "
              "folds",
              pos, balanced.size() - pos, coin.mean, balanced.size(), worst, folds.size())};
}

Outcome determinism() {
  ExperimentConfig c;
  c.seed = 8;
  c.generator = noisy_spec(600);
  c.classification_forest.n_estimators = 20;
  c.regression_forest.n_estimators = 20;
  c.regression_forest.max_depth = 20;
  c.regression_repetitions = 1;
  c.explain_instances = 100;
  const auto serial = run_experiment(c);
  c.threads = 4;
  const auto parallel = run_experiment(c);

  bool same = serial.report.dump() == parallel.report.dump();
  for (auto part : {&ExperimentResult::classification, &ExperimentResult::regression}) {
    const auto& a = *(serial.*part);
    const auto& b = *(parallel.*part);
    same = same && forest_to_json(a.forest).dump() == forest_to_json(b.forest).dump();
    nlohmann::json ea = nlohmann::json::array(), eb = nlohmann::json::array();
    for (const auto& e : a.explanations) ea.push_back(explanation_to_json(e, feature_name_list()));
    for (const auto& e : b.explanations) eb.push_back(explanation_to_json(e, feature_name_list()));
    same = same && ea.dump() == eb.dump();
  }
  const auto again = run_experiment(c);
  same = same && again.report.dump() == serial.report.dump();
  return {same, fmt("threads 1 vs 4 vs rerun: report %s, models and explanations %s",
                    serial.report["report_hash"].get<std::string>().c_str(), same ? "byte-identical" : "DIFFER")};
}

}  // namespace
}  // namespace glancelab

int main() {
  using namespace glancelab;
  const std::pair<const char*, std::function<Outcome()>> criteria[] = {
      {"1 shap exactness", shap_exactness},      {"2 local accuracy", local_accuracy},
      {"3 filter suite", filter_suite},          {"4 segmentation oracle", segmentation_oracle},
      {"5 planted-effect recovery", planted_recovery}, {"6 directional recovery", directional_recovery},
      {"7 protocol checks", protocol_checks},    {"8 determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s criterion %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str(),
                seconds_since(t0));
    std::fflush(stdout);
    failed += !o.pass;
  }
  return failed == 0 ? 0 : 1;
}
