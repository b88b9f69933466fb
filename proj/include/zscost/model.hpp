#pragma once

#include <array>
#include <chrono>
#include <fstream>
#include <numeric>
#include <string>
#include <vector>

#include <json.hpp>

#include "zscost/featurizer.hpp"
#include "zscost/neural.hpp"
#include "zscost/trace_model.hpp"

namespace zscost {

// Q-error: symmetric relative error, >= 1, equal to 1 iff c == chat.
inline double qerror(double c, double chat) {
  if (c <= 0.0 || chat <= 0.0) throw Error("qerror: inputs must be positive");
  return std::max(c / chat, chat / c);
}

struct ModelConfig {
  int hidden_dim = 64;
  int encoder_depth = 2;
  int combiner_depth = 2;
  int estimation_depth = 3;
  double lr = 1e-3;
  double lr_decay = 1.0;    // per-epoch multiplicative decay
  double grad_clip = 1e3;   // global L2 norm ceiling per minibatch
  int batch_size = 32;
  int max_epochs = 100;
  int patience = 10;  // epochs without validation improvement
  std::uint64_t seed = 0;

  void validate() const {
    if (hidden_dim < 1 || encoder_depth < 1 || combiner_depth < 1 ||
        estimation_depth < 1 || lr <= 0.0 || lr_decay <= 0.0 ||
        lr_decay > 1.0 || batch_size < 1 || max_epochs < 0 || patience < 1)
      throw Error("ModelConfig: all fields must be positive");
  }
};

struct FinetuneConfig {
  double lr = 1e-4;
  int epochs = 20;
  int batch_size = 32;
  std::uint64_t seed = 0;
};

struct TrainReport {
  struct Epoch {
    double train_loss = 0.0;
    double val_median_qerror = 0.0;
  };
  std::vector<Epoch> epochs;
  int chosen_epoch = -1;
  double wall_seconds = 0.0;
};

// Per-sample Q-errors are clamped in the loss to keep early-training
// gradients bounded.
inline constexpr double kLossClamp = 1e8;

// ---------------------------------------------------------------------------
// ZeroShotModel: node-type-specific encoder and combiner MLPs plus one
// estimation MLP. Inference is a bottom-up pass over the query graph:
//   h_v  = encoder[T(v)](x_v)
//   h'_v = combiner[T(v)]( sum_{u in children(v)} h'_u  ++  h_v )
//   chat = exp( estimator(h'_root) )
// ---------------------------------------------------------------------------

struct ZeroShotModel {
  static constexpr int kFormatVersion = 1;

  FeatureSpec spec;
  FeatureNormalizer norm;
  ModelConfig config;
  std::array<Mlp, kNumNodeTypes> encoders;
  std::array<Mlp, kNumNodeTypes> combiners;
  Mlp estimator;

  static ZeroShotModel initialize(const FeatureSpec& spec,
                                  const FeatureNormalizer& norm,
                                  const ModelConfig& cfg) {
    cfg.validate();
    ZeroShotModel m;
    m.spec = spec;
    m.norm = norm;
    m.config = cfg;
    Rng rng(derive_seed(cfg.seed, 0xA11C));
    for (int t = 0; t < kNumNodeTypes; ++t)
      m.encoders[t] = Mlp::make(spec.dim(static_cast<NodeType>(t)),
                                cfg.hidden_dim, cfg.hidden_dim,
                                cfg.encoder_depth, rng);
    for (int t = 0; t < kNumNodeTypes; ++t)
      m.combiners[t] = Mlp::make(2 * cfg.hidden_dim, cfg.hidden_dim,
                                 cfg.hidden_dim, cfg.combiner_depth, rng);
    m.estimator =
        Mlp::make(cfg.hidden_dim, cfg.hidden_dim, 1, cfg.estimation_depth, rng);
    return m;
  }

  double predict(const QueryGraph& g) const {
    const std::size_t n = g.nodes.size();
    std::vector<std::vector<double>> hidden(n);
    std::vector<double> comb_in(2 * config.hidden_dim);
    for (int v : g.topo_order) {
      const int t = static_cast<int>(g.nodes[v].type);
      const std::vector<double> h = mlp_forward(encoders[t], g.nodes[v].features);
      // Children aggregate by elementwise sum in ascending node_id order;
      // the zero vector when childless.
      std::fill(comb_in.begin(), comb_in.begin() + config.hidden_dim, 0.0);
      for (int u : g.children[v])
        for (int i = 0; i < config.hidden_dim; ++i) comb_in[i] += hidden[u][i];
      std::copy(h.begin(), h.end(), comb_in.begin() + config.hidden_dim);
      hidden[v] = mlp_forward(combiners[t], comb_in);
    }
    // Clamp the exponent so an untrained or diverged network still yields a
    // positive, finite runtime.
    const double y = mlp_forward(estimator, hidden[g.root])[0];
    return std::exp(std::clamp(y, -700.0, 700.0));
  }

  std::vector<std::span<double>> param_views() {
    std::vector<std::span<double>> out;
    auto add = [&](Mlp& m) {
      for (auto& l : m.layers) {
        out.emplace_back(l.W.data);
        out.emplace_back(l.b);
      }
    };
    for (auto& m : encoders) add(m);
    for (auto& m : combiners) add(m);
    add(estimator);
    return out;
  }
};

namespace detail {

struct ModelGrads {
  std::vector<MlpGrads> encoders, combiners;
  MlpGrads estimator;

  explicit ModelGrads(ZeroShotModel& m) : estimator(m.estimator) {
    for (auto& e : m.encoders) encoders.emplace_back(e);
    for (auto& c : m.combiners) combiners.emplace_back(c);
  }
  void zero() {
    for (auto& g : encoders) g.zero();
    for (auto& g : combiners) g.zero();
    estimator.zero();
  }
  std::vector<MlpGrads*> all() {
    std::vector<MlpGrads*> out;
    for (auto& g : encoders) out.push_back(&g);
    for (auto& g : combiners) out.push_back(&g);
    out.push_back(&estimator);
    return out;
  }
  std::vector<std::span<const double>> views() {
    std::vector<std::span<const double>> out;
    auto add = [&](MlpGrads& g) {
      for (auto& l : g.layers) {
        out.emplace_back(l.W.data);
        out.emplace_back(l.b);
      }
    };
    for (auto& g : encoders) add(g);
    for (auto& g : combiners) add(g);
    add(estimator);
    return out;
  }
};

// Scales a set of gradient buffers so their global L2 norm does not exceed
// max_norm. NaN/inf norms are left alone; the optimizer rejects those steps.
inline void clip_global_norm(std::vector<MlpGrads*> grads, double max_norm) {
  double sq = 0.0;
  for (MlpGrads* g : grads)
    for (const auto& l : g->layers) {
      for (double x : l.W.data) sq += x * x;
      for (double x : l.b) sq += x * x;
    }
  const double norm = std::sqrt(sq);
  if (!(norm > max_norm)) return;
  const double s = max_norm / norm;
  for (MlpGrads* g : grads)
    for (auto& l : g->layers) {
      for (double& x : l.W.data) x *= s;
      for (double& x : l.b) x *= s;
    }
}

// Taped forward pass; returns the predicted-runtime Var (after exp).
inline Var forward_taped(const ZeroShotModel& m, const QueryGraph& g,
                         Tape& tape, ModelGrads* grads) {
  const std::size_t n = g.nodes.size();
  std::vector<Var> hidden(n, -1);
  const std::vector<double> zeros(m.config.hidden_dim, 0.0);
  std::vector<Var> child_vars;
  for (int v : g.topo_order) {
    const int t = static_cast<int>(g.nodes[v].type);
    const Var x = tape.input(g.nodes[v].features);
    const Var h = mlp_forward(m.encoders[t], tape, x,
                              grads ? &grads->encoders[t] : nullptr);
    Var agg;
    if (g.children[v].empty()) {
      agg = tape.input(zeros);
    } else {
      child_vars.clear();
      for (int u : g.children[v]) child_vars.push_back(hidden[u]);
      agg = tape.sum(child_vars);
    }
    hidden[v] = mlp_forward(m.combiners[t], tape, tape.concat(agg, h),
                            grads ? &grads->combiners[t] : nullptr);
  }
  const Var score = mlp_forward(m.estimator, tape, hidden[g.root],
                                grads ? &grads->estimator : nullptr);
  return tape.exp(score);
}

// Clamped Q-error of the prediction against the true runtime c.
inline Var qerror_loss(Tape& tape, Var chat, double c) {
  const Var over = tape.recip_scale(chat, c);   // c / chat
  const Var under = tape.scale(chat, 1.0 / c);  // chat / c
  return tape.clamp_max(tape.max2(over, under), kLossClamp);
}

struct PreparedSample {
  QueryGraph graph;
  double runtime = 0.0;
};

// One Adam pass over `order` in minibatches; returns mean train loss.
inline double run_epoch(ZeroShotModel& model, ModelGrads& grads, Adam& adam,
                        const std::vector<PreparedSample>& samples,
                        const std::vector<std::size_t>& order, int batch_size,
                        double grad_clip) {
  Tape tape;
  double loss_sum = 0.0;
  auto params = model.param_views();
  for (std::size_t begin = 0; begin < order.size(); begin += batch_size) {
    const std::size_t end = std::min(order.size(), begin + batch_size);
    const double inv = 1.0 / static_cast<double>(end - begin);
    grads.zero();
    for (std::size_t i = begin; i < end; ++i) {
      const PreparedSample& s = samples[order[i]];
      tape.reset();
      const Var chat = forward_taped(model, s.graph, tape, &grads);
      const Var loss = qerror_loss(tape, chat, s.runtime);
      const double lv = tape.scalar(loss);
      if (!std::isfinite(lv)) throw Error("training: non-finite loss");
      loss_sum += lv;
      tape.backward(loss, inv);
    }
    clip_global_norm(grads.all(), grad_clip);
    if (!adam.step(params, grads.views()))
      throw Error("training: non-finite gradient, step rejected");
  }
  return loss_sum / static_cast<double>(order.size());
}

inline std::vector<std::size_t> adam_shapes(ZeroShotModel& m) {
  std::vector<std::size_t> shapes;
  for (auto v : m.param_views()) shapes.push_back(v.size());
  return shapes;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

struct TrainSplit {
  std::vector<CorpusEntry> train, val;
};

// Validation split stratified by database (deterministic given seed).
inline TrainSplit stratified_split(const TraceCorpus& corpus,
                                   double val_fraction, std::uint64_t seed) {
  TrainSplit split;
  const auto by_db = corpus.by_database();
  std::size_t db_index = 0;
  for (const auto& [db, idxs] : by_db) {
    const DatabaseCatalog* catalog = &corpus.catalogs.at(db);
    std::vector<std::size_t> order = idxs;
    Rng rng(derive_seed(seed, 0x5B117 + db_index++));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[uniform_int(rng, 0, i - 1)]);
    std::size_t n_val =
        static_cast<std::size_t>(val_fraction * static_cast<double>(order.size()));
    if (order.size() < 2) n_val = 0;
    for (std::size_t i = 0; i < order.size(); ++i) {
      auto& dst = i < n_val ? split.val : split.train;
      dst.push_back(CorpusEntry{&corpus.samples[order[i]], catalog});
    }
  }
  return split;
}

inline std::pair<ZeroShotModel, TrainReport> train(const TraceCorpus& corpus,
                                                   const ModelConfig& cfg,
                                                   CardSource source,
                                                   double val_fraction = 0.1) {
  cfg.validate();
  if (corpus.samples.size() < 2 || corpus.catalogs.empty())
    throw Error("train: insufficient data (need >= 2 samples and a catalog)");
  const auto t0 = std::chrono::steady_clock::now();

  const TrainSplit split = stratified_split(corpus, val_fraction, cfg.seed);
  const FeatureSpec spec = FeatureSpec::standard();
  // The normalizer sees only the training split.
  const FeatureNormalizer norm = fit_normalizer(split.train, spec, source);

  auto prepare = [&](const std::vector<CorpusEntry>& entries) {
    std::vector<detail::PreparedSample> out;
    out.reserve(entries.size());
    for (const auto& e : entries)
      out.push_back({build_query_graph(*e.sample, *e.catalog, source, spec, norm),
                     e.sample->runtime_s});
    return out;
  };
  const auto train_set = prepare(split.train);
  const auto val_set = prepare(split.val);

  ZeroShotModel model = ZeroShotModel::initialize(spec, norm, cfg);
  {
    // Start the exp head at the mean log runtime of the training labels;
    // otherwise the first epochs are spent closing an orders-of-magnitude
    // offset.
    double log_sum = 0.0;
    for (const auto& s : train_set) log_sum += std::log(s.runtime);
    model.estimator.layers.back().b[0] =
        log_sum / static_cast<double>(train_set.size());
  }
  detail::ModelGrads grads(model);
  Adam adam(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8}, detail::adam_shapes(model));

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(derive_seed(cfg.seed, 0x0E29));

  TrainReport report;
  ZeroShotModel best = model;
  double best_metric = std::numeric_limits<double>::infinity();
  int since_best = 0;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    adam.set_lr(cfg.lr * std::pow(cfg.lr_decay, epoch));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[uniform_int(shuffle_rng, 0, i - 1)]);
    const double train_loss = detail::run_epoch(
        model, grads, adam, train_set, order, cfg.batch_size, cfg.grad_clip);
    double metric;
    if (!val_set.empty()) {
      std::vector<double> qe;
      qe.reserve(val_set.size());
      for (const auto& s : val_set)
        qe.push_back(qerror(s.runtime, model.predict(s.graph)));
      metric = median(std::move(qe));
    } else {
      metric = train_loss;  // tiny corpora: fall back to train loss
    }
    report.epochs.push_back({train_loss, metric});
    if (metric < best_metric) {
      best_metric = metric;
      best = model;
      report.chosen_epoch = epoch;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  if (report.chosen_epoch < 0) {
    best = model;  // max_epochs == 0
    report.chosen_epoch = 0;
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(best), std::move(report)};
}

// Continues optimization from the current parameters on the extra samples
// only. The normalizer stays frozen.
inline ZeroShotModel finetune(const ZeroShotModel& base,
                              const TraceCorpus& extra,
                              const FinetuneConfig& cfg,
                              CardSource source = CardSource::Actual) {
  ZeroShotModel model = base;
  if (cfg.epochs == 0 || extra.samples.empty()) return model;
  std::vector<detail::PreparedSample> samples;
  for (const auto& s : extra.samples) {
    const auto cit = extra.catalogs.find(s.database_id);
    if (cit == extra.catalogs.end())
      throw Error("finetune: missing catalog for database " + s.database_id);
    samples.push_back(
        {build_query_graph(s, cit->second, source, model.spec, model.norm),
         s.runtime_s});
  }
  detail::ModelGrads grads(model);
  Adam adam(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8}, detail::adam_shapes(model));
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(derive_seed(cfg.seed, 0xF17E));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[uniform_int(rng, 0, i - 1)]);
    detail::run_epoch(model, grads, adam, samples, order, cfg.batch_size,
                      1e3);
  }
  return model;
}

// ---------------------------------------------------------------------------
// Persistence: JSON artifact with format version and content checksum.
// ---------------------------------------------------------------------------

namespace detail {

inline json mlp_to_json(const Mlp& m) {
  json layers = json::array();
  for (const auto& l : m.layers)
    layers.push_back({{"rows", l.W.rows},
                      {"cols", l.W.cols},
                      {"w", l.W.data},
                      {"b", l.b}});
  return layers;
}

inline Mlp mlp_from_json(const json& j) {
  Mlp m;
  for (const auto& lj : j) {
    Mlp::Layer l;
    l.W.rows = lj.at("rows").get<int>();
    l.W.cols = lj.at("cols").get<int>();
    l.W.data = lj.at("w").get<std::vector<double>>();
    l.b = lj.at("b").get<std::vector<double>>();
    if (l.W.data.size() !=
        static_cast<std::size_t>(l.W.rows) * static_cast<std::size_t>(l.W.cols))
      throw Error("model file: weight shape mismatch");
    m.layers.push_back(std::move(l));
  }
  return m;
}

inline json spec_to_json(const FeatureSpec& spec) {
  json types = json::array();
  for (const auto& p : spec.per_type) {
    json num = json::array(), cat = json::array();
    for (const auto& s : p.numeric)
      num.push_back({{"name", s.name}, {"log", s.log_transform}});
    for (const auto& s : p.categorical)
      cat.push_back({{"name", s.name}, {"vocabulary", s.vocabulary}});
    types.push_back({{"numeric", std::move(num)}, {"categorical", std::move(cat)}});
  }
  return types;
}

inline FeatureSpec spec_from_json(const json& j) {
  FeatureSpec spec;
  int t = 0;
  for (const auto& tj : j) {
    auto& p = spec.per_type[t++];
    for (const auto& s : tj.at("numeric"))
      p.numeric.push_back({s.at("name").get<std::string>(), s.at("log").get<bool>()});
    for (const auto& s : tj.at("categorical"))
      p.categorical.push_back({s.at("name").get<std::string>(),
                               s.at("vocabulary").get<std::vector<std::string>>()});
  }
  return spec;
}

inline json norm_to_json(const FeatureNormalizer& n) {
  json types = json::array();
  for (const auto& slots : n.per_type) {
    json arr = json::array();
    for (const auto& m : slots) arr.push_back({{"mean", m.mean}, {"std", m.std}});
    types.push_back(std::move(arr));
  }
  return types;
}

inline FeatureNormalizer norm_from_json(const json& j) {
  FeatureNormalizer n;
  int t = 0;
  for (const auto& tj : j) {
    for (const auto& mj : tj)
      n.per_type[t].push_back(
          {mj.at("mean").get<double>(), mj.at("std").get<double>()});
    ++t;
  }
  n.fitted = true;
  return n;
}

inline json config_to_json(const ModelConfig& c) {
  return json{{"hidden_dim", c.hidden_dim},
              {"encoder_depth", c.encoder_depth},
              {"combiner_depth", c.combiner_depth},
              {"estimation_depth", c.estimation_depth},
              {"lr", c.lr},
              {"lr_decay", c.lr_decay},
              {"grad_clip", c.grad_clip},
              {"batch_size", c.batch_size},
              {"max_epochs", c.max_epochs},
              {"patience", c.patience},
              {"seed", c.seed}};
}

inline ModelConfig config_from_json(const json& j) {
  ModelConfig c;
  c.hidden_dim = j.at("hidden_dim").get<int>();
  c.encoder_depth = j.at("encoder_depth").get<int>();
  c.combiner_depth = j.at("combiner_depth").get<int>();
  c.estimation_depth = j.at("estimation_depth").get<int>();
  c.lr = j.at("lr").get<double>();
  c.lr_decay = j.at("lr_decay").get<double>();
  c.grad_clip = j.at("grad_clip").get<double>();
  c.batch_size = j.at("batch_size").get<int>();
  c.max_epochs = j.at("max_epochs").get<int>();
  c.patience = j.at("patience").get<int>();
  c.seed = j.at("seed").get<std::uint64_t>();
  return c;
}

}  // namespace detail

inline std::string serialize_model(const ZeroShotModel& m) {
  json payload{{"config", detail::config_to_json(m.config)},
               {"feature_spec", detail::spec_to_json(m.spec)},
               {"normalizer", detail::norm_to_json(m.norm)}};
  json encs = json::array(), combs = json::array();
  for (const auto& e : m.encoders) encs.push_back(detail::mlp_to_json(e));
  for (const auto& c : m.combiners) combs.push_back(detail::mlp_to_json(c));
  payload["weights"] = {{"encoders", std::move(encs)},
                        {"combiners", std::move(combs)},
                        {"estimator", detail::mlp_to_json(m.estimator)}};
  const std::string body = payload.dump();
  char checksum[17];
  std::snprintf(checksum, sizeof(checksum), "%016llx",
                static_cast<unsigned long long>(fnv1a(body)));
  json file{{"format_version", ZeroShotModel::kFormatVersion},
            {"checksum", checksum},
            {"payload", std::move(payload)}};
  return file.dump();
}

inline ZeroShotModel deserialize_model(const std::string& text) {
  json file;
  try {
    file = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(std::string("model file: ") + e.what());
  }
  const int version = file.at("format_version").get<int>();
  if (version != ZeroShotModel::kFormatVersion)
    throw Error("model file: version mismatch (got " + std::to_string(version) +
                ", expected " + std::to_string(ZeroShotModel::kFormatVersion) + ")");
  const std::string body = file.at("payload").dump();
  char checksum[17];
  std::snprintf(checksum, sizeof(checksum), "%016llx",
                static_cast<unsigned long long>(fnv1a(body)));
  if (file.at("checksum").get<std::string>() != checksum)
    throw Error("model file: checksum mismatch (corrupt file)");

  const json& payload = file.at("payload");
  ZeroShotModel m;
  m.config = detail::config_from_json(payload.at("config"));
  m.spec = detail::spec_from_json(payload.at("feature_spec"));
  m.norm = detail::norm_from_json(payload.at("normalizer"));
  int t = 0;
  for (const auto& ej : payload.at("weights").at("encoders"))
    m.encoders[t++] = detail::mlp_from_json(ej);
  t = 0;
  for (const auto& cj : payload.at("weights").at("combiners"))
    m.combiners[t++] = detail::mlp_from_json(cj);
  m.estimator = detail::mlp_from_json(payload.at("weights").at("estimator"));
  return m;
}

inline void save_model(const ZeroShotModel& m, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("save_model: cannot open " + path);
  out << serialize_model(m);
  if (!out) throw Error("save_model: write failed for " + path);
}

inline ZeroShotModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("load_model: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return deserialize_model(text);
}

}  // namespace zscost
