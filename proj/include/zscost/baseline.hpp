#pragma once

#include <numeric>
#include <vector>

#include "zscost/model.hpp"

namespace zscost {

// ---------------------------------------------------------------------------
// Flat-vector ablation: a plan becomes, per operator in the closed
// vocabulary, an occurrence count and the sum of output cardinalities.
// Interleaved layout: entry 2*op is the count, 2*op+1 the cardinality sum.
// Tree structure is deliberately lost; that is the point of the ablation.
// ---------------------------------------------------------------------------

inline constexpr int kFlatDim = 2 * kNumOpNames;

namespace detail {

inline void flat_accumulate(const PlanOperator& op, CardSource source,
                            std::vector<double>& out) {
  const int i = static_cast<int>(op.opname);
  out[2 * i] += 1.0;
  out[2 * i + 1] +=
      source == CardSource::Actual ? op.act_card_out : op.est_card_out;
  for (const auto& c : op.children) flat_accumulate(c, source, out);
}

}  // namespace detail

inline std::vector<double> flat_encode(const PlanSample& sample,
                                       CardSource source) {
  std::vector<double> out(kFlatDim, 0.0);
  detail::flat_accumulate(sample.root, source, out);
  return out;
}

struct BaselineModel {
  std::vector<FeatureNormalizer::Moments> norm;  // per flat entry
  Mlp net;  // kFlatDim -> 1, exp head applied outside
  ModelConfig config;

  // Cardinality sums pass through log1p before standardization; counts are
  // standardized as-is.
  static double transform_entry(int index, double value) {
    return index % 2 == 1 ? std::log1p(value) : value;
  }

  std::vector<double> encode(const PlanSample& sample, CardSource source) const {
    std::vector<double> v = flat_encode(sample, source);
    for (int i = 0; i < kFlatDim; ++i)
      v[i] = (transform_entry(i, v[i]) - norm[i].mean) / norm[i].std;
    return v;
  }
};

inline double predict_baseline(const BaselineModel& model,
                               const PlanSample& sample, CardSource source) {
  const double y = mlp_forward(model.net, model.encode(sample, source))[0];
  return std::exp(std::clamp(y, -700.0, 700.0));
}

// Same loss, optimizer, stratified validation split and early stopping as the
// graph model; only the representation differs.
inline std::pair<BaselineModel, TrainReport> train_baseline(
    const TraceCorpus& corpus, CardSource source, const ModelConfig& cfg,
    double val_fraction = 0.1) {
  cfg.validate();
  if (corpus.samples.size() < 2 || corpus.catalogs.empty())
    throw Error("train_baseline: insufficient data");
  const auto t0 = std::chrono::steady_clock::now();
  const TrainSplit split = stratified_split(corpus, val_fraction, cfg.seed);

  BaselineModel model;
  model.config = cfg;
  model.norm.resize(kFlatDim);
  {
    std::vector<double> sum(kFlatDim, 0.0), sumsq(kFlatDim, 0.0);
    for (const auto& e : split.train) {
      const std::vector<double> v = flat_encode(*e.sample, source);
      for (int i = 0; i < kFlatDim; ++i) {
        const double x = BaselineModel::transform_entry(i, v[i]);
        sum[i] += x;
        sumsq[i] += x * x;
      }
    }
    const double n = static_cast<double>(split.train.size());
    for (int i = 0; i < kFlatDim; ++i) {
      model.norm[i].mean = sum[i] / n;
      const double var = sumsq[i] / n - model.norm[i].mean * model.norm[i].mean;
      model.norm[i].std = std::max(std::sqrt(std::max(var, 0.0)),
                                   FeatureNormalizer::kStdFloor);
    }
  }

  struct Prepared {
    std::vector<double> features;
    double runtime;
  };
  auto prepare = [&](const std::vector<CorpusEntry>& entries) {
    std::vector<Prepared> out;
    for (const auto& e : entries)
      out.push_back({model.encode(*e.sample, source), e.sample->runtime_s});
    return out;
  };
  const auto train_set = prepare(split.train);
  const auto val_set = prepare(split.val);

  Rng init_rng(derive_seed(cfg.seed, 0xBA5E));
  model.net = Mlp::make(kFlatDim, cfg.hidden_dim, 1, cfg.estimation_depth, init_rng);
  {
    double log_sum = 0.0;
    for (const auto& s : train_set) log_sum += std::log(s.runtime);
    model.net.layers.back().b[0] =
        log_sum / static_cast<double>(train_set.size());
  }

  MlpGrads grads(model.net);
  std::vector<std::span<double>> params;
  std::vector<std::span<const double>> grad_views;
  std::vector<std::size_t> shapes;
  for (auto& l : model.net.layers) {
    params.emplace_back(l.W.data);
    params.emplace_back(l.b);
    shapes.push_back(l.W.data.size());
    shapes.push_back(l.b.size());
  }
  for (auto& l : grads.layers) {
    grad_views.emplace_back(l.W.data);
    grad_views.emplace_back(l.b);
  }
  Adam adam(AdamConfig{cfg.lr, 0.9, 0.999, 1e-8}, shapes);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(derive_seed(cfg.seed, 0x0E29));

  TrainReport report;
  BaselineModel best = model;
  double best_metric = std::numeric_limits<double>::infinity();
  int since_best = 0;
  Tape tape;
  for (int epoch = 0; epoch < cfg.max_epochs; ++epoch) {
    adam.set_lr(cfg.lr * std::pow(cfg.lr_decay, epoch));
    for (std::size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[uniform_int(shuffle_rng, 0, i - 1)]);
    double loss_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size();
         begin += cfg.batch_size) {
      const std::size_t end =
          std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      const double inv = 1.0 / static_cast<double>(end - begin);
      grads.zero();
      for (std::size_t i = begin; i < end; ++i) {
        const Prepared& s = train_set[order[i]];
        tape.reset();
        const Var x = tape.input(s.features);
        const Var chat = tape.exp(mlp_forward(model.net, tape, x, &grads));
        const Var loss = detail::qerror_loss(tape, chat, s.runtime);
        if (!std::isfinite(tape.scalar(loss)))
          throw Error("train_baseline: non-finite loss");
        loss_sum += tape.scalar(loss);
        tape.backward(loss, inv);
      }
      detail::clip_global_norm({&grads}, cfg.grad_clip);
      if (!adam.step(params, grad_views))
        throw Error("train_baseline: non-finite gradient, step rejected");
    }
    const double train_loss = loss_sum / static_cast<double>(order.size());
    double metric;
    if (!val_set.empty()) {
      std::vector<double> qe;
      for (const auto& s : val_set)
        qe.push_back(qerror(
            s.runtime, std::exp(mlp_forward(model.net, s.features)[0])));
      metric = median(std::move(qe));
    } else {
      metric = train_loss;
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
    best = model;
    report.chosen_epoch = 0;
  }
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(best), std::move(report)};
}

}  // namespace zscost
