#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"
#include "zscost/synth.hpp"

using namespace zscost;
using testutil::make_catalog;
using testutil::make_sample;
using testutil::make_scan;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void walk(const PlanOperator& op,
          const std::function<void(const PlanOperator&)>& fn) {
  fn(op);
  for (const auto& c : op.children) walk(c, fn);
}

bool predicate_uses(const PredicateExpr& e,
                    const std::function<bool(const PredicateExpr&)>& pred) {
  if (pred(e)) return true;
  if (!e.is_bool()) return false;
  for (const auto& c : e.as_bool().children)
    if (predicate_uses(c, pred)) return true;
  return false;
}

}  // namespace

TEST_CASE("generated catalogs satisfy their own invariants") {
  SynthParams params;
  const SynthDatabase db = gen_database(params, "d0", 7);
  REQUIRE(db.catalog.tables.size() >= 2);
  for (const auto& t : db.catalog.tables) {
    double row_width = 0.0;
    for (const auto& c : t.columns) {
      CHECK(c.ndistinct >= 1.0);
      CHECK(c.null_frac >= 0.0);
      CHECK(c.null_frac <= 1.0);
      CHECK(c.correlation >= -1.0);
      CHECK(c.correlation <= 1.0);
      row_width += c.width;
    }
    CHECK(t.relpages ==
          std::ceil(t.reltuples * row_width / kPageBytes));
  }
  // Every non-first table reaches another via an FK edge: connected graph.
  CHECK(db.fks.size() >= db.catalog.tables.size() - 1);
}

TEST_CASE("relpages formula matches the hand-computed example") {
  // 10^6 rows of 100 bytes on 8192-byte pages.
  CHECK(std::ceil(1e6 * 100.0 / kPageBytes) == 12208.0);
}

TEST_CASE("oracle reproduces the hand-computed sequential scan cost") {
  // 10^5 rows, 1221 pages, one predicate node, one worker, no noise:
  //   1221 * 1e-4 + 1e5 * 1e-6 + 1e5 * 1 * 2e-7 = 0.2421 s.
  DatabaseCatalog cat = make_catalog();
  cat.tables[0].reltuples = 1e5;
  cat.tables[0].relpages = 1221.0;
  PlanOperator scan = make_scan("orders", 5e4, 16.0);
  scan.filter = PredicateExpr::make_comparison(
      ColumnRef{"orders", "customer_id"}, CompareOp::Eq, 1.0);
  OracleParams oracle;
  oracle.noise_sigma = 0.0;
  const double t = oracle_runtime(scan, cat, oracle, 123);
  CHECK(t == Catch::Approx(0.2421).epsilon(1e-9));

  SECTION("two workers divide by 2^0.8") {
    PlanOperator par = scan;
    par.workers = 2;
    CHECK(oracle_runtime(par, cat, oracle, 123) ==
          Catch::Approx(0.2421 / std::pow(2.0, 0.8)).epsilon(1e-9));
  }
}

TEST_CASE("noisy oracle is reproducible per seed") {
  const DatabaseCatalog cat = make_catalog();
  const PlanOperator scan = make_scan("orders", 1e4, 16.0);
  OracleParams oracle;
  const double a = oracle_runtime(scan, cat, oracle, 42);
  const double b = oracle_runtime(scan, cat, oracle, 42);
  const double c = oracle_runtime(scan, cat, oracle, 43);
  CHECK(a == b);
  CHECK(a != c);
  CHECK(a > 0.0);
}

TEST_CASE("standard mode avoids complex predicates and index scans") {
  SynthParams params;
  const SynthDatabase db = gen_database(params, "d0", 3);
  WorkloadOptions opts;
  opts.mode = WorkloadMode::Standard;
  const std::vector<PlanOperator> plans = gen_workload(db, opts, 50, 11);
  for (const auto& plan : plans) {
    walk(plan, [](const PlanOperator& op) {
      CHECK(op.opname != OpName::IndexScan);
      CHECK(op.opname != OpName::IndexOnlyScan);
      if (!op.filter) return;
      CHECK_FALSE(predicate_uses(*op.filter, [](const PredicateExpr& e) {
        if (e.is_bool()) return e.as_bool().op == BoolOp::Or;
        const CompareOp c = e.as_comparison().op;
        return c == CompareOp::Like || c == CompareOp::NotLike ||
               c == CompareOp::In || c == CompareOp::IsNull ||
               c == CompareOp::IsNotNull;
      }));
    });
  }
}

TEST_CASE("index mode produces index scans") {
  SynthParams params;
  const SynthDatabase db = gen_database(params, "d0", 3);
  WorkloadOptions opts;
  opts.mode = WorkloadMode::Index;
  const std::vector<PlanOperator> plans = gen_workload(db, opts, 50, 11);
  int index_scans = 0;
  for (const auto& plan : plans)
    walk(plan, [&](const PlanOperator& op) {
      index_scans += is_scan(op.opname) && op.opname != OpName::SeqScan;
    });
  CHECK(index_scans > 0);
}

TEST_CASE("joins respect FK containment") {
  SynthParams params;
  const SynthDatabase db = gen_database(params, "d0", 5);
  WorkloadOptions opts;
  opts.min_joins = 1;
  const std::vector<PlanOperator> plans = gen_workload(db, opts, 40, 13);
  for (const auto& plan : plans)
    walk(plan, [](const PlanOperator& op) {
      if (!is_join(op.opname)) return;
      const double prod =
          op.children[0].act_card_out * op.children[1].act_card_out;
      CHECK(op.act_card_out <= prod * (1.0 + 1e-9));
    });
}

TEST_CASE("generated corpora parse losslessly") {
  const SynthParams params = [] {
    SynthParams p;
    p.num_databases = 2;
    return p;
  }();
  auto [corpus, summary] =
      build_corpus(params, OracleParams{}, {WorkloadMode::Standard}, 20, 5);
  CHECK(summary.samples == 40);

  std::string text;
  for (const auto& s : corpus.samples) text += serialize_sample(s) + "\n";
  const TraceParseResult parsed = parse_trace(text, corpus.catalogs);
  CHECK(parsed.errors.empty());
  CHECK(parsed.samples.size() == corpus.samples.size());
}

TEST_CASE("workload modes are assigned round-robin") {
  SynthParams params;
  params.num_databases = 1;
  auto [corpus, summary] = build_corpus(
      params, OracleParams{},
      {WorkloadMode::Standard, WorkloadMode::Complex, WorkloadMode::Index},
      30, 5);
  CHECK(summary.per_mode.at("standard") == 10);
  CHECK(summary.per_mode.at("complex") == 10);
  CHECK(summary.per_mode.at("index") == 10);
}

TEST_CASE("tiny timeouts discard samples") {
  SynthParams params;
  params.num_databases = 1;
  OracleParams oracle;
  oracle.timeout_s = 1e-9;
  auto [corpus, summary] =
      build_corpus(params, oracle, {WorkloadMode::Standard}, 5, 5);
  CHECK(summary.discarded_timeout > 0);
  CHECK(corpus.samples.size() < 5);
}

TEST_CASE("gen_corpus emits byte-identical files per seed") {
  namespace fs = std::filesystem;
  const fs::path base = fs::temp_directory_path() / "zscost_synth_det";
  fs::remove_all(base);
  SynthParams params;
  params.num_databases = 2;
  for (const char* run : {"a", "b"})
    gen_corpus(params, OracleParams{}, {WorkloadMode::Standard}, 15, 3,
               (base / run).string());
  CHECK(slurp(base / "a" / "trace.jsonl") == slurp(base / "b" / "trace.jsonl"));
  CHECK(slurp(base / "a" / "catalog_synthdb_00.json") ==
        slurp(base / "b" / "catalog_synthdb_00.json"));
  CHECK(slurp(base / "a" / "oracle_params.json") ==
        slurp(base / "b" / "oracle_params.json"));
  fs::remove_all(base);
}

TEST_CASE("generated plans match the golden files") {
  // 20 plans per mode from a fixed schema and seed, pinned byte-for-byte.
  // Regenerate with ZSCOST_BLESS=1 after an intentional generator change
  // and re-audit the diff.
  namespace fs = std::filesystem;
  const fs::path dir = ZSCOST_GOLDEN_DIR;
  SynthParams params;
  const SynthDatabase db = gen_database(params, "golden_db", 99);
  for (const WorkloadMode mode :
       {WorkloadMode::Standard, WorkloadMode::Complex, WorkloadMode::Index}) {
    WorkloadOptions opts;
    opts.mode = mode;
    const std::vector<PlanOperator> plans = gen_workload(db, opts, 20, 17);
    std::string text;
    for (std::size_t i = 0; i < plans.size(); ++i)
      text += serialize_sample(make_sample(plans[i], 1.0, "golden_db",
                                           "p" + std::to_string(i))) +
              "\n";
    const fs::path file = dir / ("plans_" + std::string(to_string(mode)) + ".jsonl");
    if (std::getenv("ZSCOST_BLESS")) {
      fs::create_directories(dir);
      std::ofstream out(file, std::ios::binary);
      out << text;
      continue;
    }
    INFO("golden file " << file);
    CHECK(slurp(file) == text);
  }
}
