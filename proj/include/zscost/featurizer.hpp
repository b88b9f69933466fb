#pragma once

#include <array>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "zscost/trace_model.hpp"

namespace zscost {

enum class NodeType { PlanOp, Table, Attribute, Predicate, OutputCol };
inline constexpr int kNumNodeTypes = 5;

inline const char* to_string(NodeType t) {
  switch (t) {
    case NodeType::PlanOp: return "PlanOp";
    case NodeType::Table: return "Table";
    case NodeType::Attribute: return "Attribute";
    case NodeType::Predicate: return "Predicate";
    case NodeType::OutputCol: return "OutputColumn";
  }
  return "?";
}

// Which cardinality annotation feeds the card_out / card_prod slots.
enum class CardSource { Actual, Estimated };

// ---------------------------------------------------------------------------
// Feature layout. Slot order is fixed: numeric slots first, then one-hot
// blocks, exactly in declaration order. The same layout applies to every
// database, which is what makes the encoding transferable.
// ---------------------------------------------------------------------------

struct NumericSlot {
  std::string name;
  bool log_transform = true;  // log1p before normalization
};

struct CategoricalSlot {
  std::string name;
  std::vector<std::string> vocabulary;
};

struct FeatureSpec {
  struct PerType {
    std::vector<NumericSlot> numeric;
    std::vector<CategoricalSlot> categorical;
  };
  std::array<PerType, kNumNodeTypes> per_type;

  const PerType& of(NodeType t) const {
    return per_type[static_cast<int>(t)];
  }

  int dim(NodeType t) const {
    const PerType& p = of(t);
    int d = static_cast<int>(p.numeric.size());
    for (const auto& c : p.categorical) d += static_cast<int>(c.vocabulary.size());
    return d;
  }

  static FeatureSpec standard() {
    FeatureSpec s;
    auto& plan = s.per_type[static_cast<int>(NodeType::PlanOp)];
    plan.numeric = {{"card_out", true},
                    {"card_prod", true},
                    {"width", true},
                    {"workers", true}};
    std::vector<std::string> opnames;
    for (int i = 0; i < kNumOpNames; ++i)
      opnames.push_back(to_string(static_cast<OpName>(i)));
    plan.categorical = {{"opname", std::move(opnames)}};

    auto& table = s.per_type[static_cast<int>(NodeType::Table)];
    table.numeric = {{"relpages", true}, {"reltuples", true}};
    table.categorical = {{"storage_format", {"row", "column"}}};

    auto& attr = s.per_type[static_cast<int>(NodeType::Attribute)];
    attr.numeric = {{"width", true},
                    {"correlation", false},
                    {"ndistinct", true},
                    {"null_frac", false}};
    std::vector<std::string> dtypes;
    for (int i = 0; i < kNumDataTypes; ++i)
      dtypes.push_back(to_string(static_cast<DataType>(i)));
    attr.categorical = {{"data_type", std::move(dtypes)}};

    auto& pred = s.per_type[static_cast<int>(NodeType::Predicate)];
    pred.numeric = {{"literal_feat", true}};
    std::vector<std::string> ops;
    for (int i = 0; i < kNumCompareOps; ++i)
      ops.push_back(to_string(static_cast<CompareOp>(i)));
    ops.push_back("AND");
    ops.push_back("OR");
    pred.categorical = {{"operator", std::move(ops)}};

    auto& out = s.per_type[static_cast<int>(NodeType::OutputCol)];
    std::vector<std::string> aggs;
    for (int i = 0; i < kNumAggregations; ++i)
      aggs.push_back(to_string(static_cast<Aggregation>(i)));
    out.categorical = {{"aggregation", std::move(aggs)}};
    return s;
  }
};

// Predicate operator one-hot positions: comparison ops, then AND, then OR.
inline int predicate_operator_index(CompareOp op) { return static_cast<int>(op); }
inline int predicate_operator_index(BoolOp op) {
  return kNumCompareOps + (op == BoolOp::And ? 0 : 1);
}

// ---------------------------------------------------------------------------
// Normalizer: per-slot mean/std of the transformed value over a corpus.
// ---------------------------------------------------------------------------

struct FeatureNormalizer {
  struct Moments {
    double mean = 0.0;
    double std = 1.0;
  };
  std::array<std::vector<Moments>, kNumNodeTypes> per_type;
  bool fitted = false;

  static constexpr double kStdFloor = 1e-12;
};

// A node before normalization: transformed numeric values plus categorical
// one-hot indices. This is what fit_normalizer accumulates over.
struct RawNode {
  NodeType type;
  std::vector<double> numeric;  // already transformed (log1p where specified)
  std::vector<int> categorical;
};

struct RawGraph {
  std::vector<RawNode> nodes;
  std::vector<std::pair<int, int>> edges;  // child -> parent
  int root = 0;
};

struct GraphNode {
  NodeType type;
  std::vector<double> features;
};

struct QueryGraph {
  std::vector<GraphNode> nodes;
  std::vector<std::pair<int, int>> edges;  // child -> parent
  int root = 0;
  std::vector<std::vector<int>> children;  // per node, ascending node_id
  std::vector<int> topo_order;             // children before parents, root last
};

// ---------------------------------------------------------------------------
// Graph construction
// ---------------------------------------------------------------------------

namespace detail {

class GraphBuilder {
 public:
  GraphBuilder(const DatabaseCatalog& catalog, CardSource source)
      : catalog_(catalog), source_(source) {}

  RawGraph build(const PlanSample& sample) {
    collect_referenced(sample.root);
    g_.root = build_operator(sample.root);
    return std::move(g_);
  }

 private:
  double card_of(const PlanOperator& op) const {
    return source_ == CardSource::Actual ? op.act_card_out : op.est_card_out;
  }

  int new_node(NodeType type, std::vector<double> numeric,
               std::vector<int> categorical) {
    g_.nodes.push_back(
        RawNode{type, std::move(numeric), std::move(categorical)});
    return static_cast<int>(g_.nodes.size()) - 1;
  }

  void add_edge(int child, int parent) { g_.edges.emplace_back(child, parent); }

  static double tf(double x) { return std::log1p(x); }

  void collect_referenced(const PlanOperator& op) {
    if (op.filter) collect_referenced_pred(*op.filter);
    for (const auto& oc : op.output_columns)
      for (const auto& c : oc.columns) referenced_[c.table].insert(c.column);
    for (const auto& c : op.children) collect_referenced(c);
  }

  void collect_referenced_pred(const PredicateExpr& e) {
    if (e.is_bool()) {
      for (const auto& c : e.as_bool().children) collect_referenced_pred(c);
    } else {
      const auto& cmp = e.as_comparison();
      referenced_[cmp.column.table].insert(cmp.column.column);
    }
  }

  // Attribute nodes are shared across all consumers within one query and
  // created at first mention, so numbering follows the canonical traversal.
  int attribute_node(const ColumnRef& ref) {
    auto it = attr_nodes_.find(ref);
    if (it != attr_nodes_.end()) return it->second;
    const TableStats* t = catalog_.find_table(ref.table);
    if (!t) throw ValidationError("table not in catalog: " + ref.table);
    const ColumnStats* c = t->find_column(ref.column);
    if (!c) throw ValidationError("column not in catalog: " + ref.str());
    const int id =
        new_node(NodeType::Attribute,
                 {tf(c->width), c->correlation, tf(c->ndistinct), c->null_frac},
                 {static_cast<int>(c->data_type)});
    attr_nodes_.emplace(ref, id);
    return id;
  }

  int predicate_node(const PredicateExpr& e, int parent) {
    if (e.is_bool()) {
      const auto& b = e.as_bool();
      const int id = new_node(NodeType::Predicate, {tf(0.0)},
                              {predicate_operator_index(b.op)});
      add_edge(id, parent);
      for (const auto& c : b.children) predicate_node(c, id);
      return id;
    }
    const auto& cmp = e.as_comparison();
    const int id = new_node(NodeType::Predicate, {tf(cmp.literal_feat)},
                            {predicate_operator_index(cmp.op)});
    add_edge(id, parent);
    add_edge(attribute_node(cmp.column), id);
    return id;
  }

  // Pre-order: the operator node itself, its table + attributes, its
  // predicate subtree, its output columns, then the child operators.
  int build_operator(const PlanOperator& op) {
    const int op_id =
        new_node(NodeType::PlanOp,
                 {tf(card_of(op)), 0.0 /* card_prod, filled below */,
                  tf(op.width), tf(static_cast<double>(op.workers))},
                 {static_cast<int>(op.opname)});

    if (op.table) {
      const TableStats* t = catalog_.find_table(*op.table);
      if (!t) throw ValidationError("table not in catalog: " + *op.table);
      const int table_id =
          new_node(NodeType::Table, {tf(t->relpages), tf(t->reltuples)},
                   {t->storage_format == StorageFormat::Row ? 0 : 1});
      add_edge(table_id, op_id);
      // Row-store tables contribute all their columns; column stores only
      // the columns the query actually touches.
      for (const auto& col : t->columns) {
        if (t->storage_format == StorageFormat::Column) {
          auto rit = referenced_.find(t->name);
          if (rit == referenced_.end() || !rit->second.count(col.name)) continue;
        }
        add_edge(attribute_node(ColumnRef{t->name, col.name}), table_id);
      }
    }

    if (op.filter) predicate_node(*op.filter, op_id);

    for (const auto& oc : op.output_columns) {
      const int oc_id = new_node(NodeType::OutputCol, {},
                                 {static_cast<int>(oc.aggregation)});
      add_edge(oc_id, op_id);
      for (const auto& col : oc.columns) add_edge(attribute_node(col), oc_id);
    }

    double card_prod = 1.0;
    for (const auto& child : op.children) {
      add_edge(build_operator(child), op_id);
      card_prod *= card_of(child);
    }
    g_.nodes[op_id].numeric[1] = tf(card_prod);
    return op_id;
  }

  const DatabaseCatalog& catalog_;
  CardSource source_;
  RawGraph g_;
  std::map<ColumnRef, int> attr_nodes_;
  std::map<std::string, std::set<std::string>> referenced_;
};

}  // namespace detail

inline RawGraph build_raw_graph(const PlanSample& sample,
                                const DatabaseCatalog& catalog,
                                CardSource source) {
  detail::GraphBuilder builder(catalog, source);
  return builder.build(sample);
}

// ---------------------------------------------------------------------------
// Normalizer fitting and node encoding
// ---------------------------------------------------------------------------

class NormalizerFitter {
 public:
  explicit NormalizerFitter(const FeatureSpec& spec) : spec_(&spec) {
    for (int t = 0; t < kNumNodeTypes; ++t) {
      const auto n = spec.per_type[t].numeric.size();
      sum_[t].assign(n, 0.0);
      sumsq_[t].assign(n, 0.0);
      count_[t] = 0;
    }
  }

  void add(const RawGraph& g) {
    for (const auto& node : g.nodes) {
      const int t = static_cast<int>(node.type);
      ++count_[t];
      for (std::size_t i = 0; i < node.numeric.size(); ++i) {
        sum_[t][i] += node.numeric[i];
        sumsq_[t][i] += node.numeric[i] * node.numeric[i];
      }
    }
    any_ = true;
  }

  FeatureNormalizer finish() const {
    if (!any_) throw Error("fit_normalizer: empty corpus");
    FeatureNormalizer norm;
    for (int t = 0; t < kNumNodeTypes; ++t) {
      norm.per_type[t].resize(sum_[t].size());
      for (std::size_t i = 0; i < sum_[t].size(); ++i) {
        auto& m = norm.per_type[t][i];
        if (count_[t] == 0) {
          m.mean = 0.0;
          m.std = 1.0;
          continue;
        }
        const double n = static_cast<double>(count_[t]);
        m.mean = sum_[t][i] / n;
        const double var = sumsq_[t][i] / n - m.mean * m.mean;
        m.std = std::max(std::sqrt(std::max(var, 0.0)),
                         FeatureNormalizer::kStdFloor);
      }
    }
    norm.fitted = true;
    return norm;
  }

 private:
  const FeatureSpec* spec_;
  std::array<std::vector<double>, kNumNodeTypes> sum_, sumsq_;
  std::array<std::size_t, kNumNodeTypes> count_ = {};
  bool any_ = false;
};

struct CorpusEntry {
  const PlanSample* sample;
  const DatabaseCatalog* catalog;
};

inline FeatureNormalizer fit_normalizer(const std::vector<CorpusEntry>& corpus,
                                        const FeatureSpec& spec,
                                        CardSource source) {
  NormalizerFitter fitter(spec);
  for (const auto& e : corpus)
    fitter.add(build_raw_graph(*e.sample, *e.catalog, source));
  return fitter.finish();
}

inline std::vector<double> encode_node(const RawNode& node,
                                       const FeatureSpec& spec,
                                       const FeatureNormalizer& norm) {
  if (!norm.fitted) throw Error("encode_node: unfitted normalizer");
  const int t = static_cast<int>(node.type);
  const auto& per = spec.per_type[t];
  std::vector<double> out;
  out.reserve(spec.dim(node.type));
  for (std::size_t i = 0; i < per.numeric.size(); ++i) {
    const auto& m = norm.per_type[t][i];
    out.push_back((node.numeric[i] - m.mean) / m.std);
  }
  for (std::size_t i = 0; i < per.categorical.size(); ++i) {
    const auto& voc = per.categorical[i].vocabulary;
    const std::size_t start = out.size();
    out.resize(start + voc.size(), 0.0);
    int idx = node.categorical[i];
    if (idx < 0 || idx >= static_cast<int>(voc.size()))
      idx = static_cast<int>(voc.size()) - 1;  // fallback bucket
    out[start + idx] = 1.0;
  }
  return out;
}

namespace detail {

inline void finalize_graph(QueryGraph& g) {
  const int n = static_cast<int>(g.nodes.size());
  g.children.assign(n, {});
  std::vector<int> out_degree(n, 0);
  for (const auto& [child, parent] : g.edges) {
    g.children[parent].push_back(child);
    ++out_degree[child];
  }
  for (auto& c : g.children) std::sort(c.begin(), c.end());
  if (out_degree[g.root] != 0) throw Error("query graph: root has a parent");

  // Post-order DFS from the root; shared nodes are visited once. Yields a
  // topological order with every child before its parents and root last.
  g.topo_order.clear();
  g.topo_order.reserve(n);
  std::vector<char> state(n, 0);  // 0 unvisited, 1 on stack, 2 done
  std::vector<std::pair<int, std::size_t>> stack{{g.root, 0}};
  state[g.root] = 1;
  while (!stack.empty()) {
    auto& [v, next] = stack.back();
    if (next < g.children[v].size()) {
      const int u = g.children[v][next++];
      if (state[u] == 0) {
        state[u] = 1;
        stack.emplace_back(u, 0);
      }
    } else {
      state[v] = 2;
      g.topo_order.push_back(v);
      stack.pop_back();
    }
  }
  if (static_cast<int>(g.topo_order.size()) != n)
    throw Error("query graph: node unreachable from root");
}

}  // namespace detail

inline QueryGraph build_query_graph(const PlanSample& sample,
                                    const DatabaseCatalog& catalog,
                                    CardSource source, const FeatureSpec& spec,
                                    const FeatureNormalizer& norm) {
  if (!norm.fitted) throw Error("build_query_graph: unfitted normalizer");
  const RawGraph raw = build_raw_graph(sample, catalog, source);
  QueryGraph g;
  g.edges = raw.edges;
  g.root = raw.root;
  g.nodes.reserve(raw.nodes.size());
  for (const auto& rn : raw.nodes)
    g.nodes.push_back(GraphNode{rn.type, encode_node(rn, spec, norm)});
  detail::finalize_graph(g);
  return g;
}

// Textual edge list + feature vectors with a stable ordering; used for
// golden-file comparisons.
inline std::string dump_graph(const QueryGraph& g) {
  std::string out;
  char buf[64];
  out += "root " + std::to_string(g.root) + "\n";
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    out += "node " + std::to_string(i) + " " + to_string(g.nodes[i].type);
    for (double f : g.nodes[i].features) {
      std::snprintf(buf, sizeof(buf), " %.6g", f);
      out += buf;
    }
    out += "\n";
  }
  for (const auto& [child, parent] : g.edges)
    out += "edge " + std::to_string(child) + " " + std::to_string(parent) + "\n";
  return out;
}

}  // namespace zscost
