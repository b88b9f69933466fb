#pragma once

#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "zscost/common.hpp"

namespace zscost {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Catalog types
// ---------------------------------------------------------------------------

enum class DataType { Int, Float, Categorical, String, Misc };
inline constexpr int kNumDataTypes = 5;

inline const char* to_string(DataType t) {
  switch (t) {
    case DataType::Int: return "int";
    case DataType::Float: return "float";
    case DataType::Categorical: return "categorical";
    case DataType::String: return "string";
    case DataType::Misc: return "misc";
  }
  return "misc";
}

inline DataType data_type_from_string(const std::string& s) {
  if (s == "int") return DataType::Int;
  if (s == "float") return DataType::Float;
  if (s == "categorical") return DataType::Categorical;
  if (s == "string") return DataType::String;
  if (s == "misc") return DataType::Misc;
  throw ParseError("unknown data_type '" + s + "'");
}

enum class StorageFormat { Row, Column };

struct ColumnStats {
  std::string name;
  double width = 0.0;        // average bytes per value
  double correlation = 0.0;  // physical-order correlation, [-1, 1]
  DataType data_type = DataType::Misc;
  double ndistinct = 1.0;
  double null_frac = 0.0;
};

struct TableStats {
  std::string name;
  double relpages = 0.0;
  double reltuples = 0.0;
  StorageFormat storage_format = StorageFormat::Row;
  std::vector<ColumnStats> columns;

  const ColumnStats* find_column(const std::string& col) const {
    for (const auto& c : columns)
      if (c.name == col) return &c;
    return nullptr;
  }
};

struct DatabaseCatalog {
  std::string database_id;
  std::vector<TableStats> tables;

  const TableStats* find_table(const std::string& name) const {
    for (const auto& t : tables)
      if (t.name == name) return &t;
    return nullptr;
  }
};

// ---------------------------------------------------------------------------
// Plan types
// ---------------------------------------------------------------------------

enum class OpName {
  SeqScan,
  IndexScan,
  IndexOnlyScan,
  NestedLoopJoin,
  HashJoin,
  MergeJoin,
  Sort,
  HashAggregate,
  GroupAggregate,
  Materialize,
  ShuffleBroadcast,
  ShufflePartition,
  Gather,
  Other,
};
inline constexpr int kNumOpNames = 14;

inline const char* to_string(OpName op) {
  switch (op) {
    case OpName::SeqScan: return "SeqScan";
    case OpName::IndexScan: return "IndexScan";
    case OpName::IndexOnlyScan: return "IndexOnlyScan";
    case OpName::NestedLoopJoin: return "NestedLoopJoin";
    case OpName::HashJoin: return "HashJoin";
    case OpName::MergeJoin: return "MergeJoin";
    case OpName::Sort: return "Sort";
    case OpName::HashAggregate: return "HashAggregate";
    case OpName::GroupAggregate: return "GroupAggregate";
    case OpName::Materialize: return "Materialize";
    case OpName::ShuffleBroadcast: return "ShuffleBroadcast";
    case OpName::ShufflePartition: return "ShufflePartition";
    case OpName::Gather: return "Gather";
    case OpName::Other: return "Other";
  }
  return "Other";
}

// Unknown operator names map to Other; the vocabulary stays closed so that
// encodings transfer across systems.
inline OpName opname_from_string(const std::string& s, bool* known = nullptr) {
  for (int i = 0; i < kNumOpNames; ++i) {
    const OpName op = static_cast<OpName>(i);
    if (s == to_string(op)) {
      if (known) *known = true;
      return op;
    }
  }
  if (known) *known = false;
  return OpName::Other;
}

inline bool is_scan(OpName op) {
  return op == OpName::SeqScan || op == OpName::IndexScan ||
         op == OpName::IndexOnlyScan;
}

inline bool is_join(OpName op) {
  return op == OpName::NestedLoopJoin || op == OpName::HashJoin ||
         op == OpName::MergeJoin;
}

inline bool is_unary(OpName op) {
  switch (op) {
    case OpName::Sort:
    case OpName::HashAggregate:
    case OpName::GroupAggregate:
    case OpName::Materialize:
    case OpName::ShuffleBroadcast:
    case OpName::ShufflePartition:
    case OpName::Gather:
      return true;
    default:
      return false;
  }
}

enum class BoolOp { And, Or };

enum class CompareOp {
  Eq,
  Neq,
  Lt,
  Leq,
  Gt,
  Geq,
  Like,
  NotLike,
  In,
  IsNull,
  IsNotNull,
};
inline constexpr int kNumCompareOps = 11;

inline const char* to_string(CompareOp op) {
  switch (op) {
    case CompareOp::Eq: return "EQ";
    case CompareOp::Neq: return "NEQ";
    case CompareOp::Lt: return "LT";
    case CompareOp::Leq: return "LEQ";
    case CompareOp::Gt: return "GT";
    case CompareOp::Geq: return "GEQ";
    case CompareOp::Like: return "LIKE";
    case CompareOp::NotLike: return "NOT_LIKE";
    case CompareOp::In: return "IN";
    case CompareOp::IsNull: return "IS_NULL";
    case CompareOp::IsNotNull: return "IS_NOT_NULL";
  }
  return "EQ";
}

inline CompareOp compare_op_from_string(const std::string& s) {
  for (int i = 0; i < kNumCompareOps; ++i) {
    const CompareOp op = static_cast<CompareOp>(i);
    if (s == to_string(op)) return op;
  }
  throw ParseError("unknown comparison op '" + s + "'");
}

// "table.column" reference.
struct ColumnRef {
  std::string table;
  std::string column;

  std::string str() const { return table + "." + column; }
  bool operator==(const ColumnRef&) const = default;
  bool operator<(const ColumnRef& o) const {
    return table != o.table ? table < o.table : column < o.column;
  }
};

inline ColumnRef column_ref_from_string(const std::string& s) {
  const auto dot = s.find('.');
  if (dot == std::string::npos || dot == 0 || dot + 1 == s.size())
    throw ParseError("malformed column reference '" + s + "'");
  return ColumnRef{s.substr(0, dot), s.substr(dot + 1)};
}

// Predicate structure without literals; only literal_feat survives.
// For LIKE: literal_feat = pattern length + 3 * wildcard count.
// For IN: literal_feat = number of list values. All other comparisons: 1.
struct PredicateExpr {
  struct Comparison {
    ColumnRef column;
    CompareOp op;
    double literal_feat;
  };
  struct Bool {
    BoolOp op;
    std::vector<PredicateExpr> children;
  };
  std::variant<Comparison, Bool> node;

  bool is_bool() const { return std::holds_alternative<Bool>(node); }
  const Bool& as_bool() const { return std::get<Bool>(node); }
  const Comparison& as_comparison() const { return std::get<Comparison>(node); }

  static PredicateExpr make_comparison(ColumnRef col, CompareOp op,
                                       double literal_feat) {
    PredicateExpr e;
    e.node = Comparison{std::move(col), op, literal_feat};
    return e;
  }
  static PredicateExpr make_bool(BoolOp op, std::vector<PredicateExpr> kids) {
    PredicateExpr e;
    e.node = Bool{op, std::move(kids)};
    return e;
  }
};

enum class Aggregation { None, Sum, Avg, Count, Min, Max };
inline constexpr int kNumAggregations = 6;

inline const char* to_string(Aggregation a) {
  switch (a) {
    case Aggregation::None: return "None";
    case Aggregation::Sum: return "SUM";
    case Aggregation::Avg: return "AVG";
    case Aggregation::Count: return "COUNT";
    case Aggregation::Min: return "MIN";
    case Aggregation::Max: return "MAX";
  }
  return "None";
}

inline Aggregation aggregation_from_string(const std::string& s) {
  for (int i = 0; i < kNumAggregations; ++i) {
    const Aggregation a = static_cast<Aggregation>(i);
    if (s == to_string(a)) return a;
  }
  throw ParseError("unknown aggregation '" + s + "'");
}

struct OutputColumn {
  Aggregation aggregation = Aggregation::None;
  std::vector<ColumnRef> columns;
};

struct PlanOperator {
  OpName opname = OpName::Other;
  double act_card_out = 0.0;
  double est_card_out = 0.0;
  double width = 0.0;  // output tuple bytes
  int workers = 1;
  std::optional<std::string> table;  // scans only
  std::optional<PredicateExpr> filter;
  std::vector<OutputColumn> output_columns;
  std::vector<PlanOperator> children;
};

struct PlanSample {
  std::string database_id;
  std::string sample_id;
  double runtime_s = 0.0;  // the training label
  PlanOperator root;
};

struct TraceCorpus {
  std::map<std::string, DatabaseCatalog> catalogs;
  std::vector<PlanSample> samples;

  // Sample indices grouped by database, databases in sorted-id order.
  std::map<std::string, std::vector<std::size_t>> by_database() const {
    std::map<std::string, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < samples.size(); ++i)
      out[samples[i].database_id].push_back(i);
    return out;
  }
};

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

struct ValidationReport {
  std::vector<std::string> violations;
  bool ok() const { return violations.empty(); }
  std::string str() const {
    std::string s;
    for (const auto& v : violations) s += v + "\n";
    return s;
  }
};

namespace detail {

inline void collect_tables(const PlanOperator& op, std::set<std::string>& out) {
  if (op.table) out.insert(*op.table);
  for (const auto& c : op.children) collect_tables(c, out);
}

inline void validate_predicate(const PredicateExpr& e,
                               const DatabaseCatalog& catalog,
                               const std::set<std::string>& in_scope,
                               ValidationReport& report) {
  if (e.is_bool()) {
    const auto& b = e.as_bool();
    if (b.children.size() < 2)
      report.violations.push_back("boolean predicate with fewer than 2 children");
    for (const auto& c : b.children)
      validate_predicate(c, catalog, in_scope, report);
    return;
  }
  const auto& cmp = e.as_comparison();
  const TableStats* t = catalog.find_table(cmp.column.table);
  if (!t) {
    report.violations.push_back("predicate column " + cmp.column.str() +
                                ": table not in catalog");
  } else if (!t->find_column(cmp.column.column)) {
    report.violations.push_back("predicate column " + cmp.column.str() +
                                ": column not in catalog");
  }
  if (!in_scope.count(cmp.column.table))
    report.violations.push_back("predicate column " + cmp.column.str() +
                                ": table not in operator scope");
  if (cmp.op == CompareOp::IsNull || cmp.op == CompareOp::IsNotNull) {
    if (cmp.literal_feat != 0.0)
      report.violations.push_back("literal_feat must be 0 for IS (NOT) NULL");
  } else if (cmp.op == CompareOp::In) {
    if (cmp.literal_feat < 1.0)
      report.violations.push_back("literal_feat must be >= 1 for IN");
  }
}

inline void validate_operator(const PlanOperator& op,
                              const DatabaseCatalog& catalog,
                              ValidationReport& report) {
  const std::string name = to_string(op.opname);
  if (is_scan(op.opname)) {
    if (!op.children.empty())
      report.violations.push_back(name + ": scan must have 0 children");
    if (!op.table)
      report.violations.push_back(name + ": scan missing table reference");
    else if (!catalog.find_table(*op.table))
      report.violations.push_back(name + ": table not in catalog: " + *op.table);
  } else if (is_join(op.opname)) {
    if (op.children.size() != 2)
      report.violations.push_back(name + ": join arity must be 2, got " +
                                  std::to_string(op.children.size()));
  } else if (is_unary(op.opname)) {
    if (op.children.size() != 1)
      report.violations.push_back(name + ": unary operator must have 1 child");
  }
  if (!is_scan(op.opname) && op.table)
    report.violations.push_back(name + ": table reference on non-scan");
  if (op.act_card_out < 0.0)
    report.violations.push_back(name + ": act_card_out negative");
  if (op.est_card_out < 0.0)
    report.violations.push_back(name + ": est_card_out negative");
  if (op.width < 0.0) report.violations.push_back(name + ": width negative");
  if (op.workers < 1)
    report.violations.push_back(name + ": workers must be >= 1");

  std::set<std::string> scope;
  collect_tables(op, scope);
  if (op.filter) validate_predicate(*op.filter, catalog, scope, report);
  for (const auto& oc : op.output_columns) {
    for (const auto& col : oc.columns) {
      const TableStats* t = catalog.find_table(col.table);
      if (!t)
        report.violations.push_back("output column " + col.str() +
                                    ": table not in catalog");
      else if (!t->find_column(col.column))
        report.violations.push_back("output column " + col.str() +
                                    ": column not in catalog");
      if (!scope.count(col.table))
        report.violations.push_back("output column " + col.str() +
                                    ": table not in operator scope");
    }
  }
  for (const auto& c : op.children) validate_operator(c, catalog, report);
}

}  // namespace detail

inline ValidationReport validate_sample(const PlanSample& sample,
                                        const DatabaseCatalog& catalog) {
  ValidationReport report;
  if (sample.runtime_s <= 0.0)
    report.violations.push_back("runtime_s must be > 0");
  if (sample.database_id != catalog.database_id)
    report.violations.push_back("database_id does not match catalog");
  detail::validate_operator(sample.root, catalog, report);
  return report;
}

// ---------------------------------------------------------------------------
// Catalog (de)serialization. One JSON document per database.
// ---------------------------------------------------------------------------

inline DatabaseCatalog parse_catalog(const std::string& text,
                                     std::vector<std::string>* warnings = nullptr) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("catalog: ") + e.what());
  }
  auto warn = [&](const std::string& msg) {
    if (warnings) warnings->push_back(msg);
  };
  static const std::set<std::string> known_top = {"database_id", "tables"};
  static const std::set<std::string> known_table = {
      "name", "relpages", "reltuples", "storage_format", "columns"};
  static const std::set<std::string> known_col = {
      "name", "width", "correlation", "data_type", "ndistinct", "null_frac"};

  DatabaseCatalog cat;
  if (!doc.is_object()) throw ParseError("catalog: top level must be an object");
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!known_top.count(it.key())) warn("catalog: ignoring unknown field '" + it.key() + "'");
  if (!doc.contains("database_id"))
    throw ParseError("catalog: missing database_id");
  cat.database_id = doc.at("database_id").get<std::string>();

  std::set<std::string> table_names;
  for (const auto& tj : doc.value("tables", json::array())) {
    for (auto it = tj.begin(); it != tj.end(); ++it)
      if (!known_table.count(it.key()))
        warn("table: ignoring unknown field '" + it.key() + "'");
    TableStats t;
    t.name = tj.at("name").get<std::string>();
    if (!table_names.insert(t.name).second)
      throw ValidationError("duplicate table name '" + t.name + "'");
    t.relpages = tj.at("relpages").get<double>();
    t.reltuples = tj.at("reltuples").get<double>();
    if (t.relpages < 0.0) throw ValidationError("relpages negative in table '" + t.name + "'");
    if (t.reltuples < 0.0) throw ValidationError("reltuples negative in table '" + t.name + "'");
    const std::string fmt = tj.value("storage_format", "row");
    if (fmt == "row") {
      t.storage_format = StorageFormat::Row;
    } else if (fmt == "column") {
      t.storage_format = StorageFormat::Column;
    } else {
      throw ParseError("unknown storage_format '" + fmt + "'");
    }
    std::set<std::string> col_names;
    for (const auto& cj : tj.value("columns", json::array())) {
      for (auto it = cj.begin(); it != cj.end(); ++it)
        if (!known_col.count(it.key()))
          warn("column: ignoring unknown field '" + it.key() + "'");
      ColumnStats c;
      c.name = cj.at("name").get<std::string>();
      if (!col_names.insert(c.name).second)
        throw ValidationError("duplicate column name '" + c.name + "' in table '" + t.name + "'");
      c.width = cj.at("width").get<double>();
      c.correlation = cj.at("correlation").get<double>();
      c.data_type = data_type_from_string(cj.at("data_type").get<std::string>());
      c.ndistinct = cj.at("ndistinct").get<double>();
      c.null_frac = cj.at("null_frac").get<double>();
      if (c.width < 0.0)
        throw ValidationError("width negative in column '" + c.name + "'");
      if (c.correlation < -1.0 || c.correlation > 1.0)
        throw ValidationError("correlation out of [-1,1] in column '" + c.name + "'");
      if (c.ndistinct < 1.0)
        throw ValidationError("ndistinct < 1 in column '" + c.name + "'");
      if (c.null_frac < 0.0 || c.null_frac > 1.0)
        throw ValidationError("null_frac out of [0,1] in column '" + c.name + "'");
      t.columns.push_back(std::move(c));
    }
    cat.tables.push_back(std::move(t));
  }
  return cat;
}

inline json catalog_to_json(const DatabaseCatalog& cat) {
  json tables = json::array();
  for (const auto& t : cat.tables) {
    json cols = json::array();
    for (const auto& c : t.columns) {
      cols.push_back({{"name", c.name},
                      {"width", c.width},
                      {"correlation", c.correlation},
                      {"data_type", to_string(c.data_type)},
                      {"ndistinct", c.ndistinct},
                      {"null_frac", c.null_frac}});
    }
    tables.push_back({{"name", t.name},
                      {"relpages", t.relpages},
                      {"reltuples", t.reltuples},
                      {"storage_format",
                       t.storage_format == StorageFormat::Row ? "row" : "column"},
                      {"columns", std::move(cols)}});
  }
  return json{{"database_id", cat.database_id}, {"tables", std::move(tables)}};
}

inline std::string serialize_catalog(const DatabaseCatalog& cat) {
  return catalog_to_json(cat).dump(2);
}

// ---------------------------------------------------------------------------
// Trace (de)serialization. JSON Lines, one plan per record.
// ---------------------------------------------------------------------------

namespace detail {

inline json predicate_to_json(const PredicateExpr& e) {
  if (e.is_bool()) {
    const auto& b = e.as_bool();
    json kids = json::array();
    for (const auto& c : b.children) kids.push_back(predicate_to_json(c));
    return json{{"op", b.op == BoolOp::And ? "AND" : "OR"},
                {"children", std::move(kids)}};
  }
  const auto& cmp = e.as_comparison();
  return json{{"column", cmp.column.str()},
              {"op", to_string(cmp.op)},
              {"literal_feat", cmp.literal_feat}};
}

inline PredicateExpr predicate_from_json(const json& j) {
  if (j.contains("children")) {
    const std::string op = j.at("op").get<std::string>();
    BoolOp bop;
    if (op == "AND") {
      bop = BoolOp::And;
    } else if (op == "OR") {
      bop = BoolOp::Or;
    } else {
      throw ParseError("unknown boolean op '" + op + "'");
    }
    std::vector<PredicateExpr> kids;
    for (const auto& cj : j.at("children"))
      kids.push_back(predicate_from_json(cj));
    return PredicateExpr::make_bool(bop, std::move(kids));
  }
  return PredicateExpr::make_comparison(
      column_ref_from_string(j.at("column").get<std::string>()),
      compare_op_from_string(j.at("op").get<std::string>()),
      j.at("literal_feat").get<double>());
}

inline json operator_to_json(const PlanOperator& op) {
  json j{{"opname", to_string(op.opname)},
         {"act_card_out", op.act_card_out},
         {"est_card_out", op.est_card_out},
         {"width", op.width},
         {"workers", op.workers}};
  if (op.table) j["table"] = *op.table;
  if (op.filter) j["filter"] = predicate_to_json(*op.filter);
  if (!op.output_columns.empty()) {
    json ocs = json::array();
    for (const auto& oc : op.output_columns) {
      json cols = json::array();
      for (const auto& c : oc.columns) cols.push_back(c.str());
      ocs.push_back({{"aggregation", to_string(oc.aggregation)},
                     {"columns", std::move(cols)}});
    }
    j["output_columns"] = std::move(ocs);
  }
  if (!op.children.empty()) {
    json kids = json::array();
    for (const auto& c : op.children) kids.push_back(operator_to_json(c));
    j["children"] = std::move(kids);
  }
  return j;
}

inline PlanOperator operator_from_json(const json& j,
                                       std::vector<std::string>* warnings) {
  PlanOperator op;
  const std::string opname = j.at("opname").get<std::string>();
  bool known = false;
  op.opname = opname_from_string(opname, &known);
  if (!known && warnings)
    warnings->push_back("unknown opname '" + opname + "' mapped to Other");
  op.act_card_out = j.at("act_card_out").get<double>();
  op.est_card_out = j.at("est_card_out").get<double>();
  op.width = j.at("width").get<double>();
  op.workers = j.at("workers").get<int>();
  if (j.contains("table")) op.table = j.at("table").get<std::string>();
  if (j.contains("filter"))
    op.filter = predicate_from_json(j.at("filter"));
  if (j.contains("output_columns")) {
    for (const auto& ocj : j.at("output_columns")) {
      OutputColumn oc;
      oc.aggregation =
          aggregation_from_string(ocj.at("aggregation").get<std::string>());
      for (const auto& cj : ocj.at("columns"))
        oc.columns.push_back(column_ref_from_string(cj.get<std::string>()));
      op.output_columns.push_back(std::move(oc));
    }
  }
  if (j.contains("children"))
    for (const auto& cj : j.at("children"))
      op.children.push_back(operator_from_json(cj, warnings));
  return op;
}

}  // namespace detail

inline json sample_to_json(const PlanSample& s) {
  return json{{"database_id", s.database_id},
              {"sample_id", s.sample_id},
              {"runtime_s", s.runtime_s},
              {"plan", detail::operator_to_json(s.root)}};
}

inline std::string serialize_sample(const PlanSample& s) {
  return sample_to_json(s).dump();
}

struct TraceParseResult {
  std::vector<PlanSample> samples;
  struct LineError {
    std::size_t line;  // 1-based
    std::string message;
  };
  std::vector<LineError> errors;
  std::vector<std::string> warnings;
};

// Each line is parsed and validated independently; a bad line is reported
// with its line number and does not affect any other line.
inline TraceParseResult parse_trace(
    std::istream& in, const std::map<std::string, DatabaseCatalog>& catalogs) {
  TraceParseResult result;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      json j = json::parse(line);
      PlanSample s;
      s.database_id = j.at("database_id").get<std::string>();
      s.sample_id = j.at("sample_id").get<std::string>();
      s.runtime_s = j.at("runtime_s").get<double>();
      s.root = detail::operator_from_json(j.at("plan"), &result.warnings);
      const auto cit = catalogs.find(s.database_id);
      if (cit == catalogs.end())
        throw ValidationError("unknown database_id '" + s.database_id + "'");
      const ValidationReport report = validate_sample(s, cit->second);
      if (!report.ok())
        throw ValidationError(report.violations.front());
      result.samples.push_back(std::move(s));
    } catch (const std::exception& e) {
      result.errors.push_back({lineno, e.what()});
    }
  }
  return result;
}

inline TraceParseResult parse_trace(
    const std::string& text,
    const std::map<std::string, DatabaseCatalog>& catalogs) {
  std::istringstream in(text);
  return parse_trace(in, catalogs);
}

// Counts nodes in a predicate tree (boolean and comparison nodes alike).
inline int predicate_node_count(const PredicateExpr& e) {
  if (!e.is_bool()) return 1;
  int n = 1;
  for (const auto& c : e.as_bool().children) n += predicate_node_count(c);
  return n;
}

inline int operator_count(const PlanOperator& op) {
  int n = 1;
  for (const auto& c : op.children) n += operator_count(c);
  return n;
}

}  // namespace zscost
