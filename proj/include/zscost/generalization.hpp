#pragma once

#include <deque>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "zscost/baseline.hpp"
#include "zscost/model.hpp"

namespace zscost {

// ---------------------------------------------------------------------------
// Leave-databases-out estimation of the expected generalization error.
// ---------------------------------------------------------------------------

struct FoldResult {
  std::string database;
  std::uint64_t seed = 0;
  double median_q = 0.0;
  double p95_q = 0.0;
  double max_q = 0.0;
  std::size_t count = 0;
};

struct GeneralizationReport {
  std::vector<FoldResult> folds;
  // Per database: mean over seeds of the fold median Q-error.
  std::map<std::string, double> per_database_median;
  // Estimate of the expected error on an unseen database: mean of the
  // per-database medians.
  double aggregate = 0.0;
  std::vector<std::uint64_t> seeds;

  void finalize() {
    std::map<std::string, std::vector<double>> medians;
    for (const auto& f : folds) medians[f.database].push_back(f.median_q);
    per_database_median.clear();
    double sum = 0.0;
    for (const auto& [db, ms] : medians) {
      per_database_median[db] = mean(ms);
      sum += per_database_median[db];
    }
    aggregate = medians.empty() ? 0.0 : sum / static_cast<double>(medians.size());
  }

  json to_json() const {
    json folds_j = json::array();
    for (const auto& f : folds)
      folds_j.push_back({{"database", f.database},
                         {"seed", f.seed},
                         {"median_qerror", f.median_q},
                         {"p95_qerror", f.p95_q},
                         {"max_qerror", f.max_q},
                         {"count", f.count}});
    return json{{"folds", std::move(folds_j)},
                {"per_database_median", per_database_median},
                {"aggregate", aggregate},
                {"seeds", seeds}};
  }

  std::string table() const {
    std::string out = "database              median      p95      max\n";
    char buf[128];
    for (const auto& [db, med] : per_database_median) {
      double p95 = 0.0, mx = 0.0;
      int n = 0;
      for (const auto& f : folds)
        if (f.database == db) {
          p95 += f.p95_q;
          mx = std::max(mx, f.max_q);
          ++n;
        }
      std::snprintf(buf, sizeof(buf), "%-20s %8.3f %8.3f %8.3f\n", db.c_str(),
                    med, n ? p95 / n : 0.0, mx);
      out += buf;
    }
    std::snprintf(buf, sizeof(buf), "aggregate E(T*) = %.4f\n", aggregate);
    out += buf;
    return out;
  }
};

// Everything a fold needs: train on the sub-corpus, return per-sample
// Q-errors on the held-out samples (in input order).
using FoldEvaluator = std::function<std::vector<double>(
    const TraceCorpus& train_corpus, const TraceCorpus& test_corpus,
    std::uint64_t seed)>;

inline TraceCorpus corpus_subset(const TraceCorpus& corpus,
                                 const std::vector<std::string>& databases) {
  TraceCorpus out;
  for (const auto& db : databases) out.catalogs[db] = corpus.catalogs.at(db);
  for (const auto& s : corpus.samples)
    if (out.catalogs.count(s.database_id)) out.samples.push_back(s);
  return out;
}

inline GeneralizationReport lodo_run(const TraceCorpus& corpus,
                                     const std::vector<std::uint64_t>& seeds,
                                     const FoldEvaluator& evaluate) {
  std::vector<std::string> databases;
  for (const auto& [db, _] : corpus.catalogs) databases.push_back(db);
  if (databases.size() < 2)
    throw Error("lodo: need at least 2 databases");
  GeneralizationReport report;
  report.seeds = seeds;
  for (const std::uint64_t seed : seeds) {
    for (const auto& held_out : databases) {
      std::vector<std::string> train_dbs;
      for (const auto& db : databases)
        if (db != held_out) train_dbs.push_back(db);
      const TraceCorpus train_corpus = corpus_subset(corpus, train_dbs);
      const TraceCorpus test_corpus = corpus_subset(corpus, {held_out});
      const std::vector<double> qe = evaluate(train_corpus, test_corpus, seed);
      FoldResult f;
      f.database = held_out;
      f.seed = seed;
      f.count = qe.size();
      f.median_q = median(qe);
      f.p95_q = percentile(qe, 95.0);
      f.max_q = *std::max_element(qe.begin(), qe.end());
      report.folds.push_back(std::move(f));
    }
  }
  report.finalize();
  return report;
}

inline std::vector<double> test_qerrors(const ZeroShotModel& model,
                                        const TraceCorpus& test,
                                        CardSource source) {
  std::vector<double> qe;
  qe.reserve(test.samples.size());
  for (const auto& s : test.samples) {
    const QueryGraph g = build_query_graph(s, test.catalogs.at(s.database_id),
                                           source, model.spec, model.norm);
    qe.push_back(qerror(s.runtime_s, model.predict(g)));
  }
  return qe;
}

inline FoldEvaluator zero_shot_evaluator(const ModelConfig& cfg,
                                         CardSource source) {
  return [cfg, source](const TraceCorpus& train_corpus,
                       const TraceCorpus& test_corpus, std::uint64_t seed) {
    ModelConfig fold_cfg = cfg;
    fold_cfg.seed = seed;
    auto [model, report] = train(train_corpus, fold_cfg, source);
    return test_qerrors(model, test_corpus, source);
  };
}

inline FoldEvaluator baseline_evaluator(const ModelConfig& cfg,
                                        CardSource source) {
  return [cfg, source](const TraceCorpus& train_corpus,
                       const TraceCorpus& test_corpus, std::uint64_t seed) {
    ModelConfig fold_cfg = cfg;
    fold_cfg.seed = seed;
    auto [model, report] = train_baseline(train_corpus, source, fold_cfg);
    std::vector<double> qe;
    for (const auto& s : test_corpus.samples)
      qe.push_back(qerror(s.runtime_s, predict_baseline(model, s, source)));
    return qe;
  };
}

inline GeneralizationReport lodo_evaluate(const TraceCorpus& corpus,
                                          const ModelConfig& cfg,
                                          CardSource source,
                                          const std::vector<std::uint64_t>& seeds) {
  return lodo_run(corpus, seeds, zero_shot_evaluator(cfg, source));
}

// ---------------------------------------------------------------------------
// Learning curve over the number of training databases, against one fixed
// held-out target database.
// ---------------------------------------------------------------------------

struct LearningCurve {
  struct Point {
    int k = 0;
    double mean_median_q = 0.0;
    double std_median_q = 0.0;
  };
  std::vector<Point> points;
  std::string target_database;

  json to_json() const {
    json pts = json::array();
    for (const auto& p : points)
      pts.push_back({{"k", p.k},
                     {"mean_median_qerror", p.mean_median_q},
                     {"std_median_qerror", p.std_median_q}});
    return json{{"target_database", target_database}, {"points", std::move(pts)}};
  }
};

inline LearningCurve learning_curve(const TraceCorpus& corpus,
                                    const std::vector<int>& k_values,
                                    const std::vector<std::uint64_t>& seeds,
                                    const ModelConfig& cfg, CardSource source,
                                    const std::string& target_db) {
  if (!corpus.catalogs.count(target_db))
    throw Error("learning_curve: unknown target database " + target_db);
  std::vector<std::string> pool;
  for (const auto& [db, _] : corpus.catalogs)
    if (db != target_db) pool.push_back(db);
  for (std::size_t i = 1; i < k_values.size(); ++i)
    if (k_values[i] <= k_values[i - 1])
      throw Error("learning_curve: k values must be strictly increasing");
  for (int k : k_values)
    if (k < 1 || k > static_cast<int>(pool.size()))
      throw Error("learning_curve: k out of range (1.." +
                  std::to_string(pool.size()) + ")");

  const TraceCorpus test_corpus = corpus_subset(corpus, {target_db});
  LearningCurve curve;
  curve.target_database = target_db;
  for (int k : k_values) {
    std::vector<double> medians;
    for (const std::uint64_t seed : seeds) {
      // Sample k training databases without replacement.
      std::vector<std::string> cand = pool;
      Rng rng(derive_seed(seed, 0xC0DE + static_cast<std::uint64_t>(k)));
      for (std::size_t i = cand.size(); i > 1; --i)
        std::swap(cand[i - 1], cand[uniform_int(rng, 0, i - 1)]);
      cand.resize(k);
      std::sort(cand.begin(), cand.end());
      ModelConfig fold_cfg = cfg;
      fold_cfg.seed = seed;
      auto [model, report] =
          train(corpus_subset(corpus, cand), fold_cfg, source);
      medians.push_back(median(test_qerrors(model, test_corpus, source)));
    }
    curve.points.push_back({k, mean(medians), stddev(medians)});
  }
  return curve;
}

// ---------------------------------------------------------------------------
// Drift monitoring: sliding window of (true, predicted) runtimes; flags
// drift once the window is at least half full and its median Q-error
// exceeds the threshold.
// ---------------------------------------------------------------------------

struct DriftStatus {
  bool drifted = false;
  double window_median = 1.0;
};

class DriftMonitor {
 public:
  explicit DriftMonitor(std::size_t window_size = 100, double threshold = 2.0)
      : window_size_(window_size), threshold_(threshold) {
    if (window_size_ < 1 || threshold_ < 1.0)
      throw Error("DriftMonitor: invalid configuration");
  }

  DriftStatus update(double true_runtime, double predicted_runtime) {
    const double q = qerror(true_runtime, predicted_runtime);
    window_.push_back(q);
    if (window_.size() > window_size_) window_.pop_front();
    DriftStatus status;
    status.window_median = median({window_.begin(), window_.end()});
    status.drifted = 2 * window_.size() >= window_size_ &&
                     status.window_median > threshold_;
    return status;
  }

  std::size_t window_fill() const { return window_.size(); }

 private:
  std::size_t window_size_;
  double threshold_;
  std::deque<double> window_;
};

}  // namespace zscost
