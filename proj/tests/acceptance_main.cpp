// Acceptance harness: one PASS/FAIL line per criterion, exit code equal to
// the number of failures. The heavy criteria share one generated corpus.
#include <chrono>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <string>
#include <vector>

#include "zscost/baseline.hpp"
#include "zscost/generalization.hpp"
#include "zscost/model.hpp"
#include "zscost/synth.hpp"

using namespace zscost;

namespace {

int failures = 0;
std::chrono::steady_clock::time_point criterion_start;

void begin() { criterion_start = std::chrono::steady_clock::now(); }

void report(int idx, bool ok, const std::string& detail) {
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                    criterion_start)
          .count();
  std::printf("%s  criterion %d: %s  [%.1fs]\n", ok ? "PASS" : "FAIL", idx,
              detail.c_str(), secs);
  std::fflush(stdout);
  if (!ok) ++failures;
}

// Shared training configuration for every learned arm.
ModelConfig acceptance_config(std::uint64_t seed = 0) {
  ModelConfig cfg;
  cfg.hidden_dim = 32;
  cfg.lr = 0.01;
  cfg.lr_decay = 0.97;
  cfg.max_epochs = 45;
  cfg.patience = 10;
  cfg.seed = seed;
  return cfg;
}

// --------------------------------------------------------------------------
// Criterion 1: end-to-end gradients vs central finite differences.
// --------------------------------------------------------------------------

QueryGraph random_graph(Rng& rng, const FeatureSpec& spec) {
  const int n = static_cast<int>(uniform_int(rng, 3, 25));
  QueryGraph g;
  g.root = 0;
  for (int i = 0; i < n; ++i) {
    const NodeType t =
        i == 0 ? NodeType::PlanOp
               : static_cast<NodeType>(uniform_int(rng, 0, kNumNodeTypes - 1));
    std::vector<double> f(spec.dim(t));
    for (double& v : f) v = normal01(rng);
    g.nodes.push_back({t, std::move(f)});
    if (i > 0)
      g.edges.emplace_back(i, static_cast<int>(uniform_int(rng, 0, i - 1)));
  }
  detail::finalize_graph(g);
  return g;
}

double loss_value(const ZeroShotModel& model, const QueryGraph& g, double c) {
  return std::min(qerror(c, model.predict(g)), kLossClamp);
}

void criterion_gradients() {
  begin();
  Rng rng(31);
  const FeatureSpec spec = FeatureSpec::standard();
  FeatureNormalizer norm;
  norm.fitted = true;
  ModelConfig cfg;
  cfg.hidden_dim = 6;
  cfg.estimation_depth = 2;

  double max_rel = 0.0;
  long checked = 0, skipped = 0;
  for (int trial = 0; trial < 50; ++trial) {
    cfg.seed = 1000 + trial;
    ZeroShotModel model = ZeroShotModel::initialize(spec, norm, cfg);
    const QueryGraph g = random_graph(rng, spec);
    const double c = std::exp(normal01(rng));

    detail::ModelGrads grads(model);
    grads.zero();
    Tape tape;
    const Var chat = detail::forward_taped(model, g, tape, &grads);
    tape.backward(detail::qerror_loss(tape, chat, c));
    const std::vector<std::span<const double>> gviews = grads.views();
    const std::vector<std::span<double>> pviews = model.param_views();

    // Loss magnitudes reach ~1e6 under random initialization, so a smaller
    // step would be dominated by floating-point cancellation.
    const double h = 1e-4;
    const double f0 = loss_value(model, g, c);
    for (std::size_t p = 0; p < pviews.size(); ++p)
      for (std::size_t i = 0; i < pviews[p].size(); ++i) {
        double& w = pviews[p][i];
        const double save = w;
        w = save + h;
        const double up = loss_value(model, g, c);
        w = save - h;
        const double dn = loss_value(model, g, c);
        w = save;
        // A kink (leaky-relu / max / clamp switch) inside [w-h, w+h] makes
        // the central difference meaningless; detect it by disagreement of
        // the two one-sided slopes and skip that parameter.
        const double fwd = (up - f0) / h;
        const double bwd = (f0 - dn) / h;
        if (std::fabs(fwd - bwd) >
            1e-3 * std::max({std::fabs(fwd), std::fabs(bwd), 1.0})) {
          ++skipped;
          continue;
        }
        ++checked;
        const double fd = (up - dn) / (2.0 * h);
        const double an = gviews[p][i];
        const double rel = std::fabs(fd - an) /
                           std::max({std::fabs(fd), std::fabs(an), 1e-3});
        max_rel = std::max(max_rel, rel);
      }
  }
  const bool ok = max_rel < 1e-4 && skipped * 100 < checked;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "gradient check on 50 graphs, max relative error %.3g "
                "(%ld params, %ld at kinks skipped)",
                max_rel, checked, skipped);
  report(1, ok, buf);
}

// --------------------------------------------------------------------------
// Criteria 2-6 share a 10 x 500 Standard-mode corpus.
// --------------------------------------------------------------------------

void criteria_corpus(std::map<std::uint64_t, ZeroShotModel>& db0_models,
                     const TraceCorpus& corpus) {
  const std::vector<std::uint64_t> seeds{0, 1, 2};

  // Criterion 2: leave-one-database-out with actual cardinalities.
  begin();
  const FoldEvaluator actual_eval = [&](const TraceCorpus& train_c,
                                        const TraceCorpus& test_c,
                                        std::uint64_t seed) {
    auto [model, rep] =
        train(train_c, acceptance_config(seed), CardSource::Actual);
    if (test_c.catalogs.begin()->first == "synthdb_00")
      db0_models.emplace(seed, model);
    return test_qerrors(model, test_c, CardSource::Actual);
  };
  const GeneralizationReport rep_actual = lodo_run(corpus, seeds, actual_eval);
  double worst = 0.0;
  std::string worst_db;
  for (const auto& [db, med] : rep_actual.per_database_median)
    if (med > worst) {
      worst = med;
      worst_db = db;
    }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "LODO medians all <= 1.5 (worst %s = %.3f, aggregate %.3f)",
                worst_db.c_str(), worst, rep_actual.aggregate);
  report(2, worst <= 1.5, buf);

  // Criterion 3: actual cardinalities never meaningfully worse.
  begin();
  const GeneralizationReport rep_est = lodo_run(
      corpus, seeds,
      zero_shot_evaluator(acceptance_config(), CardSource::Estimated));
  std::snprintf(buf, sizeof(buf),
                "aggregate actual %.3f <= estimated %.3f + 0.05",
                rep_actual.aggregate, rep_est.aggregate);
  report(3, rep_actual.aggregate <= rep_est.aggregate + 0.05, buf);

  // Criterion 4: flat-vector ablation at least 10%% worse.
  begin();
  const GeneralizationReport rep_base = lodo_run(
      corpus, seeds,
      baseline_evaluator(acceptance_config(), CardSource::Actual));
  std::snprintf(buf, sizeof(buf),
                "baseline aggregate %.3f >= 1.1 x zero-shot %.3f",
                rep_base.aggregate, rep_actual.aggregate);
  report(4, rep_base.aggregate >= 1.10 * rep_actual.aggregate, buf);

  // Criterion 5: learning curve flattens but does not regress.
  begin();
  const LearningCurve curve =
      learning_curve(corpus, {1, 2, 4, 8}, seeds, acceptance_config(),
                     CardSource::Actual, "synthdb_00");
  const double at1 = curve.points.front().mean_median_q;
  const double at8 = curve.points.back().mean_median_q;
  std::snprintf(buf, sizeof(buf), "mean median at k=8 %.3f <= k=1 %.3f", at8,
                at1);
  report(5, at8 <= at1, buf);

  // Criterion 6: fine-tuning on 100 held-out samples helps (within 0.02).
  begin();
  const TraceCorpus db0 = corpus_subset(corpus, {"synthdb_00"});
  TraceCorpus ft_corpus = db0;
  ft_corpus.samples.assign(db0.samples.begin(), db0.samples.begin() + 100);
  TraceCorpus test_corpus = db0;
  test_corpus.samples.assign(db0.samples.begin() + 100, db0.samples.end());

  double mean_before = 0.0, mean_after = 0.0;
  for (const std::uint64_t seed : seeds) {
    const ZeroShotModel& base = db0_models.at(seed);
    FinetuneConfig ft;
    ft.lr = 3e-4;
    ft.epochs = 20;
    ft.seed = seed;
    const ZeroShotModel tuned = finetune(base, ft_corpus, ft);
    mean_before +=
        median(test_qerrors(base, test_corpus, CardSource::Actual));
    mean_after +=
        median(test_qerrors(tuned, test_corpus, CardSource::Actual));
  }
  mean_before /= static_cast<double>(seeds.size());
  mean_after /= static_cast<double>(seeds.size());
  std::snprintf(buf, sizeof(buf),
                "few-shot median %.3f <= zero-shot %.3f + 0.02", mean_after,
                mean_before);
  report(6, mean_after <= mean_before + 0.02, buf);
}

// --------------------------------------------------------------------------
// Criterion 7: drift on unseen join sizes, then few-shot recovery.
// --------------------------------------------------------------------------

TraceCorpus assemble(const std::vector<SynthDatabase>& dbs,
                     const WorkloadOptions& opts, int per_db,
                     const OracleParams& oracle, std::uint64_t seed) {
  TraceCorpus corpus;
  int qid = 0;
  for (std::size_t d = 0; d < dbs.size(); ++d) {
    const DatabaseCatalog& cat = dbs[d].catalog;
    corpus.catalogs[cat.database_id] = cat;
    const std::vector<PlanOperator> plans =
        gen_workload(dbs[d], opts, per_db, derive_seed(seed, d));
    for (const PlanOperator& plan : plans) {
      const double runtime =
          oracle_runtime(plan, cat, oracle, derive_seed(seed, 5000 + qid));
      if (runtime > oracle.timeout_s) continue;
      PlanSample s;
      s.database_id = cat.database_id;
      s.sample_id = "q" + std::to_string(qid++);
      s.runtime_s = runtime;
      s.root = plan;
      corpus.samples.push_back(std::move(s));
    }
  }
  return corpus;
}

void criterion_drift() {
  begin();
  SynthParams params;
  params.num_databases = 4;
  params.min_tables = 6;
  params.seed = 777;
  std::vector<SynthDatabase> dbs;
  for (int d = 0; d < params.num_databases; ++d)
    dbs.push_back(gen_database(params, "driftdb_" + std::to_string(d),
                               derive_seed(777, d)));
  const OracleParams oracle;

  WorkloadOptions small_opts;
  small_opts.max_joins = 2;
  const TraceCorpus small_joins = assemble(dbs, small_opts, 250, oracle, 1);

  // Large-join samples from whichever schema supports 4-way joins.
  WorkloadOptions large_opts;
  large_opts.min_joins = 4;
  large_opts.max_joins = 4;
  TraceCorpus large_joins;
  for (const SynthDatabase& db : dbs) {
    try {
      large_joins = assemble({db}, large_opts, 200, oracle, 2);
      break;
    } catch (const Error&) {
      continue;
    }
  }
  if (large_joins.samples.size() < 120) {
    report(7, false, "could not generate a large-join workload");
    return;
  }

  auto [model, rep] =
      train(small_joins, acceptance_config(0), CardSource::Actual);

  TraceCorpus ft_corpus = large_joins;
  ft_corpus.samples.assign(large_joins.samples.begin(),
                           large_joins.samples.begin() + 50);
  TraceCorpus test_corpus = large_joins;
  test_corpus.samples.assign(large_joins.samples.begin() + 50,
                             large_joins.samples.end());

  // Structural drift rule: drifted iff the window is at least half full
  // and its median Q-error exceeds the threshold.
  const std::size_t W = 100;
  const double theta = 2.0;
  DriftMonitor monitor(W, theta);
  std::deque<double> window;
  bool structural_ok = true;
  bool ever_drifted = false;
  for (const auto& s : test_corpus.samples) {
    const QueryGraph g =
        build_query_graph(s, test_corpus.catalogs.at(s.database_id),
                          CardSource::Actual, model.spec, model.norm);
    const double chat = model.predict(g);
    const DriftStatus st = monitor.update(s.runtime_s, chat);
    window.push_back(qerror(s.runtime_s, chat));
    if (window.size() > W) window.pop_front();
    const double med = median({window.begin(), window.end()});
    const bool expect = 2 * window.size() >= W && med > theta;
    if (st.drifted != expect || st.window_median != med)
      structural_ok = false;
    ever_drifted = ever_drifted || st.drifted;
  }

  const double before =
      median(test_qerrors(model, test_corpus, CardSource::Actual));
  FinetuneConfig ft;
  ft.lr = 3e-4;
  ft.epochs = 20;
  const ZeroShotModel tuned = finetune(model, ft_corpus, ft);
  const double after =
      median(test_qerrors(tuned, test_corpus, CardSource::Actual));

  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "drift rule structural%s (drift observed: %s); large-join "
                "median %.3f -> %.3f after fine-tuning",
                structural_ok ? "ly exact" : " MISMATCH",
                ever_drifted ? "yes" : "no", before, after);
  report(7, structural_ok && after <= before, buf);
}

// --------------------------------------------------------------------------
// Criterion 8: exact unit anchors.
// --------------------------------------------------------------------------

void criterion_anchors(const TraceCorpus& corpus,
                       const std::map<std::uint64_t, ZeroShotModel>& db0_models) {
  begin();
  std::vector<std::string> broken;
  auto anchor = [&](bool ok, const char* name) {
    if (!ok) broken.push_back(name);
  };

  // Q-error identities.
  anchor(qerror(2.0, 1.0) == 2.0 && qerror(3.0, 3.0) == 1.0 &&
             qerror(0.5, 2.0) == qerror(2.0, 0.5) &&
             std::fabs(qerror(7.0 * 0.5, 7.0 * 2.0) - 4.0) < 1e-12,
         "qerror identities");

  // Flat vector of the two-scan nested-loop example.
  {
    PlanOperator a, b, join;
    a.opname = b.opname = OpName::SeqScan;
    a.table = "ta";
    b.table = "tb";
    a.act_card_out = b.act_card_out = 1e6;
    join.opname = OpName::NestedLoopJoin;
    join.act_card_out = 1e6;
    join.children = {a, b};
    PlanSample s;
    s.database_id = "x";
    s.sample_id = "q";
    s.runtime_s = 1.0;
    s.root = join;
    const std::vector<double> v = flat_encode(s, CardSource::Actual);
    const int seq = static_cast<int>(OpName::SeqScan);
    const int nl = static_cast<int>(OpName::NestedLoopJoin);
    anchor(v[2 * seq] == 2.0 && v[2 * seq + 1] == 2e6 && v[2 * nl] == 1.0 &&
               v[2 * nl + 1] == 1e6,
           "flat vector (2, 2M, 1, 1M)");
  }

  // Oracle sequential-scan example at sigma = 0.
  {
    DatabaseCatalog cat;
    cat.database_id = "x";
    TableStats t;
    t.name = "t";
    t.reltuples = 1e5;
    t.relpages = 1221.0;
    t.columns = {{"c", 4.0, 0.0, DataType::Int, 100.0, 0.0}};
    cat.tables = {t};
    PlanOperator scan;
    scan.opname = OpName::SeqScan;
    scan.table = "t";
    scan.act_card_out = scan.est_card_out = 5e4;
    scan.filter = PredicateExpr::make_comparison(ColumnRef{"t", "c"},
                                                 CompareOp::Eq, 1.0);
    OracleParams oracle;
    oracle.noise_sigma = 0.0;
    anchor(std::fabs(oracle_runtime(scan, cat, oracle, 1) - 0.2421) < 1e-12,
           "oracle scan 0.2421 s");
  }

  // Adam's first step.
  {
    std::vector<double> p{0.0};
    std::vector<double> g{1.0};
    Adam adam(AdamConfig{0.01, 0.9, 0.999, 1e-8}, {1});
    adam.step({std::span<double>(p)}, {std::span<const double>(g)});
    anchor(std::fabs(p[0] + 0.01 / (1.0 + 1e-8)) < 1e-12, "adam t=1 step");
  }

  // Catalog and trace round-trips on generated data.
  {
    const DatabaseCatalog& cat = corpus.catalogs.begin()->second;
    anchor(serialize_catalog(parse_catalog(serialize_catalog(cat))) ==
               serialize_catalog(cat),
           "catalog round-trip");
    const std::string line = serialize_sample(corpus.samples.front());
    const TraceParseResult r = parse_trace(line, corpus.catalogs);
    anchor(r.errors.empty() && serialize_sample(r.samples[0]) == line,
           "trace round-trip");
  }

  // Save/load keeps predictions bitwise identical.
  {
    const ZeroShotModel& model = db0_models.at(0);
    const std::string path =
        (std::filesystem::temp_directory_path() / "zscost_acceptance_model.json")
            .string();
    save_model(model, path);
    const ZeroShotModel loaded = load_model(path);
    bool same = true;
    for (int i = 0; i < 20; ++i) {
      const PlanSample& s = corpus.samples[i * 7];
      const QueryGraph g =
          build_query_graph(s, corpus.catalogs.at(s.database_id),
                            CardSource::Actual, model.spec, model.norm);
      same = same && model.predict(g) == loaded.predict(g);
    }
    std::filesystem::remove(path);
    anchor(same, "save/load prediction equality");
  }

  // Full-pipeline determinism: regeneration and retraining are bitwise
  // reproducible.
  {
    SynthParams params;
    params.num_databases = 2;
    auto [c1, s1] =
        build_corpus(params, OracleParams{}, {WorkloadMode::Standard}, 25, 9);
    auto [c2, s2] =
        build_corpus(params, OracleParams{}, {WorkloadMode::Standard}, 25, 9);
    std::string t1, t2;
    for (const auto& s : c1.samples) t1 += serialize_sample(s) + "\n";
    for (const auto& s : c2.samples) t2 += serialize_sample(s) + "\n";
    ModelConfig cfg;
    cfg.hidden_dim = 8;
    cfg.max_epochs = 3;
    cfg.seed = 4;
    auto [m1, r1] = train(c1, cfg, CardSource::Actual);
    auto [m2, r2] = train(c2, cfg, CardSource::Actual);
    anchor(t1 == t2 && serialize_model(m1) == serialize_model(m2),
           "pipeline determinism");
  }

  std::string detail = "exact unit anchors";
  if (!broken.empty()) {
    detail += " -- broken:";
    for (const auto& b : broken) detail += " [" + b + "]";
  }
  report(8, broken.empty(), detail);
}

}  // namespace

int main() {
  std::printf("acceptance suite\n");
  criterion_gradients();

  std::printf("generating shared corpus (10 databases x 500 queries)...\n");
  std::fflush(stdout);
  SynthParams params;
  const auto [corpus, summary] =
      build_corpus(params, OracleParams{}, {WorkloadMode::Standard}, 500, 2025);
  std::printf("corpus ready: %d samples (%d discarded by timeout)\n",
              summary.samples, summary.discarded_timeout);
  std::fflush(stdout);

  std::map<std::uint64_t, ZeroShotModel> db0_models;
  criteria_corpus(db0_models, corpus);
  criterion_drift();
  criterion_anchors(corpus, db0_models);

  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
