#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "zscost/trace_model.hpp"

namespace zscost {

// ---------------------------------------------------------------------------
// Synthetic databases: schema statistics plus a foreign-key join graph.
// No tuples exist; only statistics and derived cardinalities.
// ---------------------------------------------------------------------------

struct SynthParams {
  int num_databases = 10;
  int min_tables = 2;
  int max_tables = 8;
  double min_rows = 1e3;
  double max_rows = 1e7;
  int min_columns = 3;
  int max_columns = 12;
  double column_store_prob = 0.3;
  std::uint64_t seed = 0;
};

struct FkEdge {
  std::string child_table;
  std::string child_column;
  std::string parent_table;
};

struct SynthDatabase {
  DatabaseCatalog catalog;
  std::vector<FkEdge> fks;
};

inline constexpr double kPageBytes = 8192.0;

inline SynthDatabase gen_database(const SynthParams& params,
                                  const std::string& database_id,
                                  std::uint64_t seed) {
  Rng rng(seed);
  SynthDatabase db;
  db.catalog.database_id = database_id;
  const int ntables =
      static_cast<int>(uniform_int(rng, params.min_tables, params.max_tables));
  for (int ti = 0; ti < ntables; ++ti) {
    TableStats t;
    t.name = "t" + std::to_string(ti);
    t.reltuples = std::floor(log_uniform(rng, params.min_rows, params.max_rows));
    t.storage_format = uniform01(rng) < params.column_store_prob
                           ? StorageFormat::Column
                           : StorageFormat::Row;
    const int ncols =
        static_cast<int>(uniform_int(rng, params.min_columns, params.max_columns));

    // c0 is the primary key.
    ColumnStats pk;
    pk.name = "c0";
    pk.width = 4.0;
    pk.data_type = DataType::Int;
    pk.ndistinct = t.reltuples;
    pk.null_frac = 0.0;
    pk.correlation = uniform_real(rng, -1.0, 1.0);
    t.columns.push_back(pk);

    // Every table except the first references an earlier table, which keeps
    // the join graph connected.
    if (ti > 0) {
      const int parent = static_cast<int>(uniform_int(rng, 0, ti - 1));
      const std::string parent_name = "t" + std::to_string(parent);
      ColumnStats fk;
      fk.name = "fk_" + parent_name;
      fk.width = 4.0;
      fk.data_type = DataType::Int;
      fk.ndistinct = std::max(1.0, std::min(
          t.reltuples, db.catalog.tables[parent].reltuples));
      fk.null_frac = 0.0;
      fk.correlation = uniform_real(rng, -1.0, 1.0);
      t.columns.push_back(fk);
      db.fks.push_back(FkEdge{t.name, fk.name, parent_name});
    }

    while (static_cast<int>(t.columns.size()) < ncols) {
      ColumnStats c;
      c.name = "c" + std::to_string(t.columns.size());
      const int kind = static_cast<int>(uniform_int(rng, 0, 3));
      switch (kind) {
        case 0:
          c.data_type = DataType::Int;
          c.width = 4.0;
          break;
        case 1:
          c.data_type = DataType::Float;
          c.width = 8.0;
          break;
        case 2:
          c.data_type = DataType::Categorical;
          c.width = 8.0;
          break;
        default:
          c.data_type = DataType::String;
          c.width = std::floor(uniform_real(rng, 8.0, 64.0));
          break;
      }
      c.ndistinct = std::max(1.0, std::floor(log_uniform(rng, 2.0, t.reltuples)));
      c.null_frac = beta_sample(rng, 1.0, 9.0);
      c.correlation = uniform_real(rng, -1.0, 1.0);
      t.columns.push_back(std::move(c));
    }

    double row_width = 0.0;
    for (const auto& c : t.columns) row_width += c.width;
    t.relpages = std::ceil(t.reltuples * row_width / kPageBytes);
    db.catalog.tables.push_back(std::move(t));
  }
  return db;
}

// ---------------------------------------------------------------------------
// Analytic runtime oracle: a fixed global per-operator cost convention that
// stands in for real query execution. All coefficients are in seconds.
// ---------------------------------------------------------------------------

struct OracleParams {
  double c_page = 1e-4;          // per scanned page
  double c_tuple = 1e-6;         // per processed row
  double c_pred = 2e-7;          // per row and predicate node
  double c_hash = 3e-6;          // per hash-build row
  double c_nl = 5e-9;            // per outer x inner row pair
  double c_sort = 2e-6;          // per row, x log2(n)
  double c_shuffle = 4e-6;       // per shuffled row
  double c_index_lookup = 5e-5;  // per index lookup
  double c_index_row = 1e-6;     // per matched row
  double worker_exponent = 0.8;  // speedup = workers^exponent
  double noise_sigma = 0.1;      // multiplicative lognormal noise
  double timeout_s = 30.0;       // queries above this are discarded

  json to_json() const {
    return json{{"c_page", c_page},
                {"c_tuple", c_tuple},
                {"c_pred", c_pred},
                {"c_hash", c_hash},
                {"c_nl", c_nl},
                {"c_sort", c_sort},
                {"c_shuffle", c_shuffle},
                {"c_index_lookup", c_index_lookup},
                {"c_index_row", c_index_row},
                {"worker_exponent", worker_exponent},
                {"noise_sigma", noise_sigma},
                {"timeout_s", timeout_s}};
  }
};

namespace detail {

inline double sum_child_cards(const PlanOperator& op) {
  double s = 0.0;
  for (const auto& c : op.children) s += c.act_card_out;
  return s;
}

inline double operator_cost(const PlanOperator& op,
                            const DatabaseCatalog& catalog,
                            const OracleParams& p) {
  const int npred = op.filter ? predicate_node_count(*op.filter) : 0;
  double cost = 0.0;
  switch (op.opname) {
    case OpName::SeqScan: {
      const TableStats* t = catalog.find_table(*op.table);
      cost = t->relpages * p.c_page + t->reltuples * p.c_tuple +
             t->reltuples * npred * p.c_pred;
      break;
    }
    case OpName::IndexScan:
    case OpName::IndexOnlyScan:
      cost = p.c_index_lookup + op.act_card_out * p.c_index_row;
      break;
    case OpName::NestedLoopJoin:
      cost = p.c_nl * op.children[0].act_card_out * op.children[1].act_card_out;
      break;
    case OpName::HashJoin:
      // Build on the second child, probe with the first.
      cost = p.c_hash * op.children[1].act_card_out +
             p.c_tuple * op.children[0].act_card_out;
      break;
    case OpName::MergeJoin:
      cost = p.c_tuple * sum_child_cards(op);
      break;
    case OpName::Sort: {
      const double n = op.children[0].act_card_out;
      cost = p.c_sort * n * std::log2(std::max(n, 2.0));
      break;
    }
    case OpName::HashAggregate:
      cost = p.c_tuple * sum_child_cards(op) + p.c_hash * op.act_card_out;
      break;
    case OpName::GroupAggregate: {
      const double n = sum_child_cards(op);
      cost = p.c_tuple * n + p.c_sort * n * std::log2(std::max(n, 2.0));
      break;
    }
    case OpName::Materialize:
    case OpName::Gather:
      cost = p.c_tuple * sum_child_cards(op);
      break;
    case OpName::ShuffleBroadcast:
    case OpName::ShufflePartition:
      cost = p.c_shuffle * sum_child_cards(op);
      break;
    case OpName::Other:
      cost = p.c_tuple * (sum_child_cards(op) + op.act_card_out);
      break;
  }
  if (!is_scan(op.opname) && npred > 0)
    cost += sum_child_cards(op) * npred * p.c_pred;
  if (op.workers > 1)
    cost /= std::pow(static_cast<double>(op.workers), p.worker_exponent);
  return cost;
}

inline double plan_cost(const PlanOperator& op, const DatabaseCatalog& catalog,
                        const OracleParams& p) {
  double cost = operator_cost(op, catalog, p);
  for (const auto& c : op.children) cost += plan_cost(c, catalog, p);
  return cost;
}

}  // namespace detail

inline double oracle_runtime(const PlanOperator& plan,
                             const DatabaseCatalog& catalog,
                             const OracleParams& oracle,
                             std::uint64_t noise_seed) {
  double runtime = detail::plan_cost(plan, catalog, oracle);
  if (oracle.noise_sigma > 0.0) {
    Rng rng(noise_seed);
    runtime *= lognormal(rng, oracle.noise_sigma);
  }
  return runtime;
}

// ---------------------------------------------------------------------------
// Workload generation: SPAJ plans over the foreign-key join graph with
// exact synthetic cardinalities (per-table independence, FK containment
// across joins). est_card emulates optimizer misestimates via lognormal
// multiplicative noise.
// ---------------------------------------------------------------------------

enum class WorkloadMode { Standard, Complex, Index };

inline const char* to_string(WorkloadMode m) {
  switch (m) {
    case WorkloadMode::Standard: return "standard";
    case WorkloadMode::Complex: return "complex";
    case WorkloadMode::Index: return "index";
  }
  return "standard";
}

inline WorkloadMode workload_mode_from_string(const std::string& s) {
  if (s == "standard") return WorkloadMode::Standard;
  if (s == "complex") return WorkloadMode::Complex;
  if (s == "index") return WorkloadMode::Index;
  throw ParseError("unknown workload mode '" + s + "'");
}

struct WorkloadOptions {
  WorkloadMode mode = WorkloadMode::Standard;
  int min_joins = 0;
  int max_joins = 4;
  double sigma_est = 0.3;  // estimated-cardinality noise
};

namespace detail {

struct ScanInfo {
  PlanOperator op;
  const TableStats* table;
  double selectivity = 1.0;
};

inline double round_rows(double x) { return std::floor(x + 0.5); }

// One conjunct; returns (expr, selectivity).
inline std::pair<PredicateExpr, double> gen_comparison(const TableStats& t,
                                                       WorkloadMode mode,
                                                       Rng& rng) {
  const auto& col = t.columns[uniform_int(rng, 0, t.columns.size() - 1)];
  const ColumnRef ref{t.name, col.name};
  const bool complex_op = mode == WorkloadMode::Complex && uniform01(rng) < 0.4;
  if (complex_op) {
    switch (uniform_int(rng, 0, 3)) {
      case 0: {  // LIKE on string-ish columns
        if (col.data_type == DataType::String) {
          const double len = std::floor(uniform_real(rng, 3.0, 12.0));
          const double wildcards = std::floor(uniform_real(rng, 1.0, 3.0));
          return {PredicateExpr::make_comparison(ref, CompareOp::Like,
                                                 len + 3.0 * wildcards),
                  uniform_real(rng, 0.001, 0.3)};
        }
        break;
      }
      case 1: {  // IN
        const double m = std::floor(uniform_real(rng, 2.0, 20.0));
        return {PredicateExpr::make_comparison(ref, CompareOp::In, m),
                std::min(1.0, m / col.ndistinct)};
      }
      case 2:
        return {PredicateExpr::make_comparison(ref, CompareOp::IsNull, 0.0),
                col.null_frac};
      default:
        return {PredicateExpr::make_comparison(ref, CompareOp::IsNotNull, 0.0),
                1.0 - col.null_frac};
    }
  }
  switch (uniform_int(rng, 0, 5)) {
    case 0:
      return {PredicateExpr::make_comparison(ref, CompareOp::Eq, 1.0),
              1.0 / col.ndistinct};
    case 1:
      return {PredicateExpr::make_comparison(ref, CompareOp::Neq, 1.0),
              1.0 - 1.0 / col.ndistinct};
    case 2:
      return {PredicateExpr::make_comparison(ref, CompareOp::Lt, 1.0),
              uniform_real(rng, 0.01, 1.0)};
    case 3:
      return {PredicateExpr::make_comparison(ref, CompareOp::Leq, 1.0),
              uniform_real(rng, 0.01, 1.0)};
    case 4:
      return {PredicateExpr::make_comparison(ref, CompareOp::Gt, 1.0),
              uniform_real(rng, 0.01, 1.0)};
    default:
      return {PredicateExpr::make_comparison(ref, CompareOp::Geq, 1.0),
              uniform_real(rng, 0.01, 1.0)};
  }
}

inline ScanInfo gen_scan(const TableStats& t, const WorkloadOptions& opts,
                         Rng& rng) {
  ScanInfo scan;
  scan.table = &t;
  const int nconj = static_cast<int>(uniform_int(rng, 0, 3));
  std::vector<PredicateExpr> conjuncts;
  double sel = 1.0;
  for (int i = 0; i < nconj; ++i) {
    if (opts.mode == WorkloadMode::Complex && uniform01(rng) < 0.3) {
      // Disjunction of two comparisons.
      auto [a, sa] = gen_comparison(t, opts.mode, rng);
      auto [b, sb] = gen_comparison(t, opts.mode, rng);
      std::vector<PredicateExpr> kids;
      kids.push_back(std::move(a));
      kids.push_back(std::move(b));
      conjuncts.push_back(PredicateExpr::make_bool(BoolOp::Or, std::move(kids)));
      sel *= sa + sb - sa * sb;
    } else {
      auto [c, sc] = gen_comparison(t, opts.mode, rng);
      conjuncts.push_back(std::move(c));
      sel *= sc;
    }
  }
  scan.selectivity = sel;

  PlanOperator& op = scan.op;
  op.opname = OpName::SeqScan;
  if (opts.mode == WorkloadMode::Index && !conjuncts.empty() &&
      uniform01(rng) < 0.5)
    op.opname = OpName::IndexScan;
  op.table = t.name;
  op.act_card_out = round_rows(t.reltuples * sel);
  double row_width = 0.0;
  for (const auto& c : t.columns) row_width += c.width;
  op.width = row_width;
  op.workers = 1;
  if (t.reltuples > 1e6 && op.opname == OpName::SeqScan) {
    const int pick = static_cast<int>(uniform_int(rng, 0, 2));
    op.workers = pick == 0 ? 1 : pick == 1 ? 2 : 4;
  }
  if (conjuncts.size() == 1) {
    op.filter = std::move(conjuncts.front());
  } else if (conjuncts.size() > 1) {
    op.filter = PredicateExpr::make_bool(BoolOp::And, std::move(conjuncts));
  }
  return scan;
}

}  // namespace detail

// Generates one unlabeled plan; returns nullopt when the FK graph cannot
// support the requested join count.
inline std::optional<PlanOperator> gen_plan(const SynthDatabase& db,
                                            const WorkloadOptions& opts,
                                            Rng& rng) {
  const auto& tables = db.catalog.tables;
  const int want_joins =
      static_cast<int>(uniform_int(rng, opts.min_joins, opts.max_joins));

  // Random connected subgraph walk over FK edges.
  std::vector<const TableStats*> chosen;
  std::set<std::string> chosen_names;
  const TableStats& start = tables[uniform_int(rng, 0, tables.size() - 1)];
  chosen.push_back(&start);
  chosen_names.insert(start.name);
  struct Extension {
    const TableStats* table;
    bool new_is_parent;          // new table is the FK target
    const TableStats* anchor;    // already-chosen endpoint
  };
  while (static_cast<int>(chosen.size()) < want_joins + 1) {
    std::vector<Extension> candidates;
    for (const auto& fk : db.fks) {
      const bool child_in = chosen_names.count(fk.child_table) > 0;
      const bool parent_in = chosen_names.count(fk.parent_table) > 0;
      if (child_in == parent_in) continue;
      if (child_in)
        candidates.push_back({db.catalog.find_table(fk.parent_table), true,
                              db.catalog.find_table(fk.child_table)});
      else
        candidates.push_back({db.catalog.find_table(fk.child_table), false,
                              db.catalog.find_table(fk.parent_table)});
    }
    if (candidates.empty()) break;
    const Extension& ext =
        candidates[uniform_int(rng, 0, candidates.size() - 1)];
    chosen.push_back(ext.table);
    chosen_names.insert(ext.table->name);
    // Remember join semantics by order; recomputed below via fks.
  }
  const int joins = static_cast<int>(chosen.size()) - 1;
  if (joins < opts.min_joins) return std::nullopt;

  // Left-deep join tree in the order tables were added.
  detail::ScanInfo first = detail::gen_scan(*chosen[0], opts, rng);
  PlanOperator plan = std::move(first.op);
  std::set<std::string> in_plan{chosen[0]->name};
  Rng est_rng(rng());  // separate stream for cardinality misestimates
  auto misestimate = [&](double act) {
    return detail::round_rows(act * lognormal(est_rng, opts.sigma_est));
  };
  plan.est_card_out = misestimate(plan.act_card_out);

  for (int i = 1; i <= joins; ++i) {
    detail::ScanInfo next = detail::gen_scan(*chosen[i], opts, rng);
    next.op.est_card_out = misestimate(next.op.act_card_out);

    // FK containment: joining toward the parent keeps each row that survives
    // the parent filter; joining toward a child multiplies by the average
    // fanout before the child filter.
    bool new_is_parent = false;
    const TableStats* anchor = nullptr;
    for (const auto& fk : db.fks) {
      if (fk.parent_table == chosen[i]->name && in_plan.count(fk.child_table)) {
        new_is_parent = true;
        anchor = db.catalog.find_table(fk.child_table);
        break;
      }
      if (fk.child_table == chosen[i]->name && in_plan.count(fk.parent_table)) {
        new_is_parent = false;
        anchor = db.catalog.find_table(fk.parent_table);
        break;
      }
    }
    if (!anchor) return std::nullopt;  // disconnected; should not happen

    double act;
    if (new_is_parent) {
      act = plan.act_card_out * next.selectivity;
    } else {
      const double fanout = chosen[i]->reltuples / anchor->reltuples;
      act = plan.act_card_out * fanout * next.selectivity;
    }
    act = detail::round_rows(std::min(act, plan.act_card_out * next.op.act_card_out));

    // Occasionally shuffle the build side before a parallel join.
    PlanOperator build = std::move(next.op);
    if (build.workers > 1 && uniform01(rng) < 0.3) {
      PlanOperator shuffle;
      shuffle.opname = uniform01(rng) < 0.5 ? OpName::ShufflePartition
                                            : OpName::ShuffleBroadcast;
      shuffle.act_card_out = build.act_card_out;
      shuffle.est_card_out = build.est_card_out;
      shuffle.width = build.width;
      shuffle.workers = build.workers;
      shuffle.children.push_back(std::move(build));
      build = std::move(shuffle);
    }

    PlanOperator join;
    const double pair_work = plan.act_card_out * build.act_card_out;
    if (pair_work <= 1e8 && uniform01(rng) < 0.35)
      join.opname = OpName::NestedLoopJoin;
    else if (uniform01(rng) < 0.15)
      join.opname = OpName::MergeJoin;
    else
      join.opname = OpName::HashJoin;
    join.act_card_out = act;
    join.est_card_out = misestimate(act);
    join.width = plan.width + build.width;
    join.workers = std::max(plan.workers, build.workers);
    join.children.push_back(std::move(plan));
    join.children.push_back(std::move(build));
    plan = std::move(join);
    in_plan.insert(chosen[i]->name);
  }

  // Optional aggregation on top.
  if (uniform01(rng) < 0.5) {
    const TableStats& gt = *chosen[uniform_int(rng, 0, chosen.size() - 1)];
    const auto& gcol = gt.columns[uniform_int(rng, 0, gt.columns.size() - 1)];
    PlanOperator agg;
    agg.opname = uniform01(rng) < 0.6 ? OpName::HashAggregate
                                      : OpName::GroupAggregate;
    agg.act_card_out =
        detail::round_rows(std::min(plan.act_card_out, gcol.ndistinct));
    agg.est_card_out = misestimate(agg.act_card_out);
    agg.width = 16.0;
    agg.workers = 1;
    static const Aggregation kAggs[] = {Aggregation::Count, Aggregation::Sum,
                                        Aggregation::Avg, Aggregation::Min,
                                        Aggregation::Max};
    OutputColumn value_col;
    value_col.aggregation = kAggs[uniform_int(rng, 0, 4)];
    const TableStats& vt = *chosen[uniform_int(rng, 0, chosen.size() - 1)];
    value_col.columns.push_back(
        ColumnRef{vt.name, vt.columns[uniform_int(rng, 0, vt.columns.size() - 1)].name});
    OutputColumn group_col;
    group_col.aggregation = Aggregation::None;
    group_col.columns.push_back(ColumnRef{gt.name, gcol.name});
    agg.output_columns.push_back(std::move(group_col));
    agg.output_columns.push_back(std::move(value_col));
    agg.children.push_back(std::move(plan));
    plan = std::move(agg);
  }

  // Optional sort on top.
  if (uniform01(rng) < 0.2) {
    PlanOperator sort;
    sort.opname = OpName::Sort;
    sort.act_card_out = plan.act_card_out;
    sort.est_card_out = plan.est_card_out;
    sort.width = plan.width;
    sort.workers = 1;
    sort.children.push_back(std::move(plan));
    plan = std::move(sort);
  }
  return plan;
}

inline std::vector<PlanOperator> gen_workload(const SynthDatabase& db,
                                              const WorkloadOptions& opts,
                                              int n, std::uint64_t seed) {
  if (n < 1) throw Error("gen_workload: n must be >= 1");
  Rng rng(seed);
  std::vector<PlanOperator> plans;
  int attempts = 0;
  const int max_attempts = 100 * n + 1000;
  while (static_cast<int>(plans.size()) < n && attempts++ < max_attempts) {
    auto plan = gen_plan(db, opts, rng);
    if (plan) plans.push_back(std::move(*plan));
  }
  if (static_cast<int>(plans.size()) < n)
    throw Error("gen_workload: could not generate requested workload "
                "(join-count constraints unsatisfiable for this schema)");
  return plans;
}

// ---------------------------------------------------------------------------
// Corpus assembly
// ---------------------------------------------------------------------------

struct CorpusSummary {
  int databases = 0;
  int samples = 0;
  int discarded_timeout = 0;
  std::map<std::string, int> per_mode;
};

inline std::pair<TraceCorpus, CorpusSummary> build_corpus(
    const SynthParams& params, const OracleParams& oracle,
    const std::vector<WorkloadMode>& modes, int queries_per_db,
    std::uint64_t seed) {
  if (modes.empty()) throw Error("build_corpus: no workload modes");
  TraceCorpus corpus;
  CorpusSummary summary;
  summary.databases = params.num_databases;
  for (int d = 0; d < params.num_databases; ++d) {
    char dbid[32];
    std::snprintf(dbid, sizeof(dbid), "synthdb_%02d", d);
    const SynthDatabase db =
        gen_database(params, dbid, derive_seed(seed, 0xDB00 + d));
    corpus.catalogs[dbid] = db.catalog;
    Rng rng(derive_seed(seed, 0x40AD + d));
    int accepted = 0;
    int attempts = 0;
    const int max_attempts = 100 * queries_per_db + 1000;
    while (accepted < queries_per_db && attempts++ < max_attempts) {
      WorkloadOptions opts;
      opts.mode = modes[accepted % modes.size()];
      auto plan = gen_plan(db, opts, rng);
      if (!plan) continue;
      const double runtime =
          oracle_runtime(*plan, db.catalog, oracle, rng());
      if (runtime > oracle.timeout_s) {
        ++summary.discarded_timeout;
        continue;
      }
      PlanSample s;
      s.database_id = dbid;
      char sid[48];
      std::snprintf(sid, sizeof(sid), "%s_q%05d", dbid, accepted);
      s.sample_id = sid;
      s.runtime_s = runtime;
      s.root = std::move(*plan);
      corpus.samples.push_back(std::move(s));
      ++summary.per_mode[to_string(opts.mode)];
      ++accepted;
      ++summary.samples;
    }
  }
  return {std::move(corpus), std::move(summary)};
}

// Writes per-database catalog files, the JSON-Lines trace, and the oracle
// coefficients used, into out_dir.
inline CorpusSummary gen_corpus(const SynthParams& params,
                                const OracleParams& oracle,
                                const std::vector<WorkloadMode>& modes,
                                int queries_per_db, std::uint64_t seed,
                                const std::string& out_dir) {
  auto [corpus, summary] =
      build_corpus(params, oracle, modes, queries_per_db, seed);
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  for (const auto& [db, catalog] : corpus.catalogs) {
    std::ofstream out(fs::path(out_dir) / ("catalog_" + db + ".json"));
    if (!out) throw Error("gen_corpus: cannot write catalog for " + db);
    out << serialize_catalog(catalog) << "\n";
  }
  {
    std::ofstream out(fs::path(out_dir) / "trace.jsonl");
    if (!out) throw Error("gen_corpus: cannot write trace file");
    for (const auto& s : corpus.samples) out << serialize_sample(s) << "\n";
  }
  {
    std::ofstream out(fs::path(out_dir) / "oracle_params.json");
    out << oracle.to_json().dump(2) << "\n";
  }
  return summary;
}

}  // namespace zscost
