#include <cmath>

#include <catch2/catch_amalgamated.hpp>

#include "test_util.hpp"
#include "zscost/featurizer.hpp"

using namespace zscost;
using testutil::make_catalog;
using testutil::make_column;
using testutil::make_join_sample;
using testutil::make_sample;
using testutil::make_scan;

namespace {

int count_type(const RawGraph& g, NodeType t) {
  int n = 0;
  for (const auto& node : g.nodes) n += node.type == t;
  return n;
}

FeatureNormalizer fit_on(const PlanSample& s, const DatabaseCatalog& cat) {
  return fit_normalizer({{&s, &cat}}, FeatureSpec::standard(),
                        CardSource::Actual);
}

}  // namespace

TEST_CASE("movie-style SPAJ plan yields the expected 13-node graph") {
  DatabaseCatalog cat;
  cat.database_id = "imdb";
  TableStats mc;
  mc.name = "movie_companies";
  mc.reltuples = 2609129.0;
  mc.relpages = 20000.0;
  mc.columns = {make_column("movie_id", 4.0, DataType::Int, 1e6),
                make_column("company_id", 4.0, DataType::Int, 2e5),
                make_column("company_type_id", 4.0, DataType::Int, 2.0)};
  TableStats ct;
  ct.name = "company_type";
  ct.reltuples = 4.0;
  ct.relpages = 1.0;
  ct.columns = {make_column("id", 4.0, DataType::Int, 4.0),
                make_column("kind", 20.0, DataType::String, 4.0)};
  cat.tables = {mc, ct};

  PlanOperator scan_mc = make_scan("movie_companies", 1300000.0, 12.0);
  scan_mc.filter = PredicateExpr::make_comparison(
      ColumnRef{"movie_companies", "company_type_id"}, CompareOp::Eq, 1.0);
  PlanOperator scan_ct = make_scan("company_type", 4.0, 24.0);
  PlanOperator join =
      testutil::make_join(OpName::HashJoin, std::move(scan_mc),
                          std::move(scan_ct), 1300000.0, 36.0);
  PlanOperator agg;
  agg.opname = OpName::HashAggregate;
  agg.act_card_out = agg.est_card_out = 1.0;
  agg.width = 8.0;
  agg.output_columns = {
      {Aggregation::Count, {ColumnRef{"movie_companies", "movie_id"}}}};
  agg.children = {std::move(join)};
  const PlanSample s = make_sample(std::move(agg), 2.0, "imdb");

  const RawGraph g = build_raw_graph(s, cat, CardSource::Actual);
  CHECK(g.nodes.size() == 13);
  CHECK(count_type(g, NodeType::PlanOp) == 4);
  CHECK(count_type(g, NodeType::Table) == 2);
  CHECK(count_type(g, NodeType::Attribute) == 5);
  CHECK(count_type(g, NodeType::Predicate) == 1);
  CHECK(count_type(g, NodeType::OutputCol) == 1);
  CHECK(g.nodes[g.root].type == NodeType::PlanOp);
}

TEST_CASE("filterless scan of a 2-column row table") {
  DatabaseCatalog cat;
  cat.database_id = "d";
  TableStats t;
  t.name = "t";
  t.reltuples = 100.0;
  t.relpages = 2.0;
  t.columns = {make_column("a", 4.0, DataType::Int, 100.0),
               make_column("b", 8.0, DataType::Float, 50.0)};
  cat.tables = {t};
  const PlanSample s = make_sample(make_scan("t", 100.0, 12.0), 0.1, "d");

  const RawGraph g = build_raw_graph(s, cat, CardSource::Actual);
  CHECK(g.nodes.size() == 4);
  CHECK(g.edges.size() == 3);
  CHECK(g.nodes[g.root].type == NodeType::PlanOp);
}

TEST_CASE("column stores contribute only referenced attributes") {
  // customers is a column store; only customers.name is referenced.
  PlanOperator scan = make_scan("customers", 10.0, 36.0);
  scan.filter = PredicateExpr::make_comparison(ColumnRef{"customers", "name"},
                                               CompareOp::Like, 8.0);
  const PlanSample s = make_sample(std::move(scan), 0.1);
  const RawGraph g = build_raw_graph(s, make_catalog(), CardSource::Actual);
  CHECK(count_type(g, NodeType::Attribute) == 1);
}

TEST_CASE("card source changes only the cardinality slots") {
  PlanOperator scan = make_scan("orders", 1000.0, 16.0, /*est_card=*/400.0);
  const PlanSample s = make_sample(std::move(scan), 0.1);
  const DatabaseCatalog cat = make_catalog();
  const RawGraph a = build_raw_graph(s, cat, CardSource::Actual);
  const RawGraph e = build_raw_graph(s, cat, CardSource::Estimated);

  REQUIRE(a.nodes.size() == e.nodes.size());
  CHECK(a.edges == e.edges);
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    CHECK(a.nodes[i].categorical == e.nodes[i].categorical);
    if (a.nodes[i].type != NodeType::PlanOp) {
      CHECK(a.nodes[i].numeric == e.nodes[i].numeric);
      continue;
    }
    // PlanOp numeric layout: card_out, card_prod, width, workers.
    CHECK(a.nodes[i].numeric[0] != e.nodes[i].numeric[0]);
    CHECK(a.nodes[i].numeric[2] == e.nodes[i].numeric[2]);
    CHECK(a.nodes[i].numeric[3] == e.nodes[i].numeric[3]);
  }
  CHECK(a.nodes[a.root].numeric[0] == Catch::Approx(std::log1p(1000.0)));
  CHECK(e.nodes[e.root].numeric[0] == Catch::Approx(std::log1p(400.0)));
}

TEST_CASE("card_prod is the product of child cardinalities") {
  const PlanSample s = make_join_sample();
  const RawGraph g = build_raw_graph(s, make_catalog(), CardSource::Actual);
  std::vector<double> prods;
  for (const auto& n : g.nodes)
    if (n.type == NodeType::PlanOp) prods.push_back(n.numeric[1]);
  // Pre-order: aggregate, join, orders scan, customers scan.
  REQUIRE(prods.size() == 4);
  CHECK(prods[0] == Catch::Approx(std::log1p(20000.0)));
  CHECK(prods[1] == Catch::Approx(std::log1p(20000.0 * 1000.0)));
  CHECK(prods[2] == Catch::Approx(std::log1p(1.0)));  // leaves
  CHECK(prods[3] == Catch::Approx(std::log1p(1.0)));
}

TEST_CASE("normalizer floors the std of constant slots") {
  const PlanSample s = make_sample(make_scan("orders", 5.0, 5.0), 0.1);
  const DatabaseCatalog cat = make_catalog();
  const FeatureNormalizer norm =
      fit_normalizer({{&s, &cat}, {&s, &cat}}, FeatureSpec::standard(),
                     CardSource::Actual);
  const auto& card = norm.per_type[static_cast<int>(NodeType::PlanOp)][0];
  CHECK(card.mean == Catch::Approx(std::log1p(5.0)));
  CHECK(card.std == FeatureNormalizer::kStdFloor);
}

TEST_CASE("normalizer moments over {0, e-1} are mean 0.5 and std 0.5") {
  // log1p maps {0, e-1} to {0, 1}; population stats are then exactly 1/2.
  const PlanSample a = make_sample(make_scan("orders", 0.0, 4.0), 0.1);
  const PlanSample b =
      make_sample(make_scan("orders", std::exp(1.0) - 1.0, 4.0), 0.1);
  const DatabaseCatalog cat = make_catalog();
  const FeatureNormalizer norm = fit_normalizer(
      {{&a, &cat}, {&b, &cat}}, FeatureSpec::standard(), CardSource::Actual);
  const auto& card = norm.per_type[static_cast<int>(NodeType::PlanOp)][0];
  CHECK(card.mean == Catch::Approx(0.5).margin(1e-12));
  CHECK(card.std == Catch::Approx(0.5).margin(1e-12));
}

TEST_CASE("fitting twice gives the same normalizer") {
  const PlanSample s = make_join_sample();
  const DatabaseCatalog cat = make_catalog();
  const FeatureNormalizer n1 = fit_on(s, cat);
  const FeatureNormalizer n2 = fit_on(s, cat);
  for (int t = 0; t < kNumNodeTypes; ++t)
    for (std::size_t i = 0; i < n1.per_type[t].size(); ++i) {
      CHECK(n1.per_type[t][i].mean == n2.per_type[t][i].mean);
      CHECK(n1.per_type[t][i].std == n2.per_type[t][i].std);
    }
}

TEST_CASE("a slot at its fitted mean encodes to zero") {
  const PlanSample s = make_join_sample();
  const DatabaseCatalog cat = make_catalog();
  const FeatureNormalizer norm = fit_on(s, cat);
  RawNode n;
  n.type = NodeType::Table;
  const auto& moments = norm.per_type[static_cast<int>(NodeType::Table)];
  n.numeric = {moments[0].mean, moments[1].mean};
  n.categorical = {0};
  const std::vector<double> f =
      encode_node(n, FeatureSpec::standard(), norm);
  CHECK(f[0] == 0.0);
  CHECK(f[1] == 0.0);
  CHECK(f[2] == 1.0);  // storage_format "row" one-hot
}

TEST_CASE("opname one-hot places HashJoin correctly") {
  const PlanSample s = make_join_sample();
  const DatabaseCatalog cat = make_catalog();
  const FeatureSpec spec = FeatureSpec::standard();
  const QueryGraph g =
      build_query_graph(s, cat, CardSource::Actual, spec, fit_on(s, cat));
  const int hj = static_cast<int>(OpName::HashJoin);
  bool found = false;
  for (const auto& node : g.nodes) {
    if (node.type != NodeType::PlanOp) continue;
    // One-hot block starts after the 4 numeric slots.
    if (node.features[4 + hj] == 1.0) {
      found = true;
      for (int i = 0; i < kNumOpNames; ++i)
        if (i != hj) CHECK(node.features[4 + i] == 0.0);
    }
  }
  CHECK(found);
}

TEST_CASE("feature dimensions follow the spec layout") {
  const FeatureSpec spec = FeatureSpec::standard();
  CHECK(spec.dim(NodeType::PlanOp) == 4 + kNumOpNames);
  CHECK(spec.dim(NodeType::Table) == 2 + 2);
  CHECK(spec.dim(NodeType::Attribute) == 4 + kNumDataTypes);
  CHECK(spec.dim(NodeType::Predicate) == 1 + kNumCompareOps + 2);
  CHECK(spec.dim(NodeType::OutputCol) == kNumAggregations);
}

TEST_CASE("topological order puts children first and the root last") {
  const PlanSample s = make_join_sample();
  const DatabaseCatalog cat = make_catalog();
  const FeatureSpec spec = FeatureSpec::standard();
  const QueryGraph g =
      build_query_graph(s, cat, CardSource::Actual, spec, fit_on(s, cat));

  REQUIRE(g.topo_order.size() == g.nodes.size());
  CHECK(g.topo_order.back() == g.root);
  std::vector<int> pos(g.nodes.size());
  for (std::size_t i = 0; i < g.topo_order.size(); ++i)
    pos[g.topo_order[i]] = static_cast<int>(i);
  for (const auto& [child, parent] : g.edges)
    CHECK(pos[child] < pos[parent]);
  // Only Attribute nodes may feed several consumers; everything else has
  // exactly one outgoing edge.
  std::vector<int> out_deg(g.nodes.size(), 0);
  for (const auto& [child, parent] : g.edges) ++out_deg[child];
  for (std::size_t v = 0; v < g.nodes.size(); ++v) {
    if (static_cast<int>(v) == g.root) continue;
    if (g.nodes[v].type == NodeType::Attribute)
      CHECK(out_deg[v] >= 1);
    else
      CHECK(out_deg[v] == 1);
  }
}

TEST_CASE("graph construction is deterministic") {
  const PlanSample s = make_join_sample();
  const DatabaseCatalog cat = make_catalog();
  const FeatureSpec spec = FeatureSpec::standard();
  const FeatureNormalizer norm = fit_on(s, cat);
  const QueryGraph g1 = build_query_graph(s, cat, CardSource::Actual, spec, norm);
  const QueryGraph g2 = build_query_graph(s, cat, CardSource::Actual, spec, norm);
  CHECK(dump_graph(g1) == dump_graph(g2));
}
