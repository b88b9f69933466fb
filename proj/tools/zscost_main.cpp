// Command-line front end: corpus generation, training, prediction,
// evaluation, leave-one-database-out runs, learning curves, fine-tuning,
// and the flat-vector baseline comparison.
//
// Exit codes: 0 success, 1 runtime/data failure, 2 usage error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "zscost/baseline.hpp"
#include "zscost/generalization.hpp"
#include "zscost/model.hpp"
#include "zscost/synth.hpp"

namespace fs = std::filesystem;
using zscost::json;

namespace {

// Thrown for problems that are the caller's fault (bad flag combinations
// detected after parsing); mapped to exit code 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw zscost::Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw zscost::Error("cannot write " + path);
  out << text;
}

// Loads catalogs from explicit files and/or directories (any file named
// catalog_*.json inside a directory is taken), then the JSON-Lines trace.
zscost::TraceCorpus load_corpus(const std::string& trace_path,
                                const std::vector<std::string>& catalog_paths) {
  zscost::TraceCorpus corpus;
  std::vector<std::string> files;
  for (const auto& p : catalog_paths) {
    if (fs::is_directory(p)) {
      for (const auto& e : fs::directory_iterator(p)) {
        const std::string name = e.path().filename().string();
        if (name.rfind("catalog_", 0) == 0 && e.path().extension() == ".json")
          files.push_back(e.path().string());
      }
    } else {
      files.push_back(p);
    }
  }
  if (files.empty()) throw zscost::Error("no catalog files found");
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    zscost::DatabaseCatalog cat = zscost::parse_catalog(read_file(f));
    corpus.catalogs[cat.database_id] = std::move(cat);
  }
  std::ifstream in(trace_path);
  if (!in) throw zscost::Error("cannot open " + trace_path);
  zscost::TraceParseResult parsed = zscost::parse_trace(in, corpus.catalogs);
  for (const auto& e : parsed.errors)
    std::cerr << trace_path << ":" << e.line << ": " << e.message << "\n";
  if (!parsed.errors.empty() && parsed.samples.empty())
    throw zscost::Error("no valid samples in " + trace_path);
  corpus.samples = std::move(parsed.samples);
  return corpus;
}

zscost::CardSource card_source(const std::string& s) {
  if (s == "actual") return zscost::CardSource::Actual;
  if (s == "estimated") return zscost::CardSource::Estimated;
  throw UsageError("--cards must be 'actual' or 'estimated'");
}

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("ZSCOST_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

// Settings shared by every training-flavoured subcommand.
struct CommonOpts {
  std::string config_path;
  int threads = 0;
  std::string cards = "actual";
  std::uint64_t seed = 0;
  zscost::ModelConfig model;
  double val_frac = 0.1;
};

void add_common(CLI::App* sub, CommonOpts& o, bool with_model_flags = true) {
  sub->add_option("--config", o.config_path,
                  "JSON config file; flags override its values");
  sub->add_option("--threads", o.threads,
                  "worker cap (0 = ZSCOST_THREADS env or machine cores)");
  sub->add_option("--seed", o.seed, "master random seed");
  if (!with_model_flags) return;
  sub->add_option("--cards", o.cards, "cardinality source: actual|estimated");
  sub->add_option("--hidden-dim", o.model.hidden_dim);
  sub->add_option("--encoder-depth", o.model.encoder_depth);
  sub->add_option("--combiner-depth", o.model.combiner_depth);
  sub->add_option("--estimation-depth", o.model.estimation_depth);
  sub->add_option("--lr", o.model.lr);
  sub->add_option("--lr-decay", o.model.lr_decay);
  sub->add_option("--grad-clip", o.model.grad_clip);
  sub->add_option("--batch-size", o.model.batch_size);
  sub->add_option("--epochs", o.model.max_epochs);
  sub->add_option("--patience", o.model.patience);
  sub->add_option("--val-frac", o.val_frac);
}

// Applies config-file values for any flag the user did not pass explicitly.
template <typename T>
void merge(const CLI::App& sub, const json& cfg, const std::string& flag,
           const std::string& key, T& var) {
  const CLI::Option* opt = sub.get_option_no_throw(flag);
  if ((opt == nullptr || opt->count() == 0) && cfg.contains(key))
    var = cfg.at(key).get<T>();
}

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw UsageError(std::string("--config: ") + e.what());
  }
}

void merge_common(const CLI::App& sub, const json& cfg, CommonOpts& o) {
  merge(sub, cfg, "--threads", "threads", o.threads);
  merge(sub, cfg, "--seed", "seed", o.seed);
  merge(sub, cfg, "--cards", "cards", o.cards);
  merge(sub, cfg, "--hidden-dim", "hidden_dim", o.model.hidden_dim);
  merge(sub, cfg, "--encoder-depth", "encoder_depth", o.model.encoder_depth);
  merge(sub, cfg, "--combiner-depth", "combiner_depth", o.model.combiner_depth);
  merge(sub, cfg, "--estimation-depth", "estimation_depth",
        o.model.estimation_depth);
  merge(sub, cfg, "--lr", "lr", o.model.lr);
  merge(sub, cfg, "--lr-decay", "lr_decay", o.model.lr_decay);
  merge(sub, cfg, "--grad-clip", "grad_clip", o.model.grad_clip);
  merge(sub, cfg, "--batch-size", "batch_size", o.model.batch_size);
  merge(sub, cfg, "--epochs", "max_epochs", o.model.max_epochs);
  merge(sub, cfg, "--patience", "patience", o.model.patience);
  merge(sub, cfg, "--val-frac", "val_fraction", o.val_frac);
}

json common_to_json(const CommonOpts& o) {
  json j = zscost::detail::config_to_json(o.model);
  j["threads"] = resolve_threads(o.threads);
  j["seed"] = o.seed;
  j["cards"] = o.cards;
  j["val_fraction"] = o.val_frac;
  return j;
}

// Every subcommand echoes its fully resolved settings so the run can be
// reproduced from the output directory alone.
void echo_config(const std::string& out_dir, const std::string& command,
                 json resolved) {
  resolved["command"] = command;
  fs::create_directories(out_dir);
  write_file((fs::path(out_dir) / "run_config.json").string(),
             resolved.dump(2) + "\n");
}

json metrics_json(const std::vector<double>& qe) {
  return json{{"count", qe.size()},
              {"median_qerror", zscost::median(qe)},
              {"p95_qerror", zscost::percentile(qe, 95.0)},
              {"max_qerror", *std::max_element(qe.begin(), qe.end())}};
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

struct GenerateOpts {
  CommonOpts common;
  std::string out;
  int databases = 10;
  int queries = 500;
  std::vector<std::string> modes{"standard"};
  double noise_sigma = 0.1;
  double timeout_s = 30.0;
};

int cmd_generate(const CLI::App& sub, GenerateOpts& o) {
  const json cfg = load_config(o.common.config_path);
  merge_common(sub, cfg, o.common);
  merge(sub, cfg, "--databases", "databases", o.databases);
  merge(sub, cfg, "--queries", "queries", o.queries);
  merge(sub, cfg, "--modes", "modes", o.modes);
  merge(sub, cfg, "--noise-sigma", "noise_sigma", o.noise_sigma);
  merge(sub, cfg, "--timeout", "timeout_s", o.timeout_s);

  zscost::SynthParams params;
  params.num_databases = o.databases;
  params.seed = o.common.seed;
  zscost::OracleParams oracle;
  oracle.noise_sigma = o.noise_sigma;
  oracle.timeout_s = o.timeout_s;
  std::vector<zscost::WorkloadMode> modes;
  for (const auto& m : o.modes)
    modes.push_back(zscost::workload_mode_from_string(m));

  const zscost::CorpusSummary summary = zscost::gen_corpus(
      params, oracle, modes, o.queries, o.common.seed, o.out);

  echo_config(o.out, "generate",
              json{{"out", o.out},
                   {"databases", o.databases},
                   {"queries", o.queries},
                   {"modes", o.modes},
                   {"noise_sigma", o.noise_sigma},
                   {"timeout_s", o.timeout_s},
                   {"seed", o.common.seed}});
  std::cout << "databases: " << summary.databases
            << "\nsamples: " << summary.samples
            << "\ndiscarded (timeout): " << summary.discarded_timeout << "\n";
  for (const auto& [mode, n] : summary.per_mode)
    std::cout << "  " << mode << ": " << n << "\n";
  return 0;
}

struct TrainOpts {
  CommonOpts common;
  std::string trace;
  std::vector<std::string> catalogs;
  std::string out_model;
};

int cmd_train(const CLI::App& sub, TrainOpts& o) {
  const json cfg = load_config(o.common.config_path);
  merge_common(sub, cfg, o.common);
  const zscost::CardSource source = card_source(o.common.cards);
  o.common.model.seed = o.common.seed;

  const zscost::TraceCorpus corpus = load_corpus(o.trace, o.catalogs);
  auto [model, report] =
      zscost::train(corpus, o.common.model, source, o.common.val_frac);
  zscost::save_model(model, o.out_model);

  const std::string out_dir = fs::path(o.out_model).parent_path().string();
  const std::string dir = out_dir.empty() ? "." : out_dir;
  json epochs = json::array();
  for (const auto& e : report.epochs)
    epochs.push_back({{"train_loss", e.train_loss},
                      {"val_median_qerror", e.val_median_qerror}});
  write_file((fs::path(dir) / "train_report.json").string(),
             json{{"epochs", std::move(epochs)},
                  {"chosen_epoch", report.chosen_epoch},
                  {"wall_seconds", report.wall_seconds}}
                     .dump(2) +
                 "\n");
  echo_config(dir, "train", common_to_json(o.common));

  const double final_val =
      report.chosen_epoch >= 0
          ? report.epochs[report.chosen_epoch].val_median_qerror
          : 0.0;
  std::cout << "model: " << o.out_model << "\nchosen epoch: "
            << report.chosen_epoch
            << "\nvalidation median Q-error: " << final_val << "\n";
  return 0;
}

struct PredictOpts {
  CommonOpts common;
  std::string model_path;
  std::string trace;
  std::vector<std::string> catalogs;
  std::string out;
};

int cmd_predict(const CLI::App& sub, PredictOpts& o) {
  const json cfg = load_config(o.common.config_path);
  merge_common(sub, cfg, o.common);
  const zscost::CardSource source = card_source(o.common.cards);

  const zscost::ZeroShotModel model = zscost::load_model(o.model_path);
  const zscost::TraceCorpus corpus = load_corpus(o.trace, o.catalogs);
  std::ostringstream csv;
  csv << "sample_id,estimate_s\n";
  for (const auto& s : corpus.samples) {
    const zscost::QueryGraph g = zscost::build_query_graph(
        s, corpus.catalogs.at(s.database_id), source, model.spec, model.norm);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", model.predict(g));
    csv << s.sample_id << "," << buf << "\n";
  }
  write_file(o.out, csv.str());
  std::cout << "wrote " << corpus.samples.size() << " predictions to " << o.out
            << "\n";
  return 0;
}

struct EvaluateOpts {
  CommonOpts common;
  std::string model_path;
  std::string trace;
  std::vector<std::string> catalogs;
  std::string out;
};

int cmd_evaluate(const CLI::App& sub, EvaluateOpts& o) {
  const json cfg = load_config(o.common.config_path);
  merge_common(sub, cfg, o.common);
  const zscost::CardSource source = card_source(o.common.cards);

  const zscost::ZeroShotModel model = zscost::load_model(o.model_path);
  const zscost::TraceCorpus corpus = load_corpus(o.trace, o.catalogs);

  std::ostringstream csv;
  csv << "sample_id,database_id,runtime_s,estimate_s,qerror\n";
  std::map<std::string, std::vector<double>> per_db;
  std::vector<double> all;
  for (const auto& s : corpus.samples) {
    const zscost::QueryGraph g = zscost::build_query_graph(
        s, corpus.catalogs.at(s.database_id), source, model.spec, model.norm);
    const double chat = model.predict(g);
    const double q = zscost::qerror(s.runtime_s, chat);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g", s.runtime_s, chat, q);
    csv << s.sample_id << "," << s.database_id << "," << buf << "\n";
    per_db[s.database_id].push_back(q);
    all.push_back(q);
  }
  if (all.empty()) throw zscost::Error("evaluate: no samples");

  json per_db_j;
  for (const auto& [db, qe] : per_db) per_db_j[db] = metrics_json(qe);
  const json metrics{{"overall", metrics_json(all)},
                     {"per_database", std::move(per_db_j)}};

  fs::create_directories(o.out);
  write_file((fs::path(o.out) / "per_sample.csv").string(), csv.str());
  write_file((fs::path(o.out) / "metrics.json").string(),
             metrics.dump(2) + "\n");
  echo_config(o.out, "evaluate", common_to_json(o.common));
  std::cout << "median Q-error: " << zscost::median(all)
            << "  p95: " << zscost::percentile(all, 95.0)
            << "  max: " << *std::max_element(all.begin(), all.end()) << "\n";
  return 0;
}

struct LodoOpts {
  CommonOpts common;
  std::string trace;
  std::vector<std::string> catalogs;
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::string out;
};

int cmd_lodo(const CLI::App& sub, LodoOpts& o, bool run_baseline_arm) {
  const json cfg = load_config(o.common.config_path);
  merge_common(sub, cfg, o.common);
  merge(sub, cfg, "--seeds", "seeds", o.seeds);
  const zscost::CardSource source = card_source(o.common.cards);

  const zscost::TraceCorpus corpus = load_corpus(o.trace, o.catalogs);
  const zscost::GeneralizationReport zs = zscost::lodo_run(
      corpus, o.seeds, zscost::zero_shot_evaluator(o.common.model, source));

  fs::create_directories(o.out);
  json resolved = common_to_json(o.common);
  resolved["seeds"] = o.seeds;

  if (!run_baseline_arm) {
    write_file((fs::path(o.out) / "lodo_report.json").string(),
               zs.to_json().dump(2) + "\n");
    echo_config(o.out, "lodo", std::move(resolved));
    std::cout << zs.table();
    return 0;
  }

  const zscost::GeneralizationReport bl = zscost::lodo_run(
      corpus, o.seeds, zscost::baseline_evaluator(o.common.model, source));
  write_file((fs::path(o.out) / "baseline_report.json").string(),
             json{{"zero_shot", zs.to_json()}, {"baseline", bl.to_json()}}
                     .dump(2) +
                 "\n");
  echo_config(o.out, "baseline", std::move(resolved));

  std::cout << "database              zero-shot   baseline\n";
  for (const auto& [db, med] : zs.per_database_median) {
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%-20s %9.3f %10.3f\n", db.c_str(), med,
                  bl.per_database_median.at(db));
    std::cout << buf;
  }
  char buf[96];
  std::snprintf(buf, sizeof(buf), "aggregate E(T*)      %9.4f %10.4f\n",
                zs.aggregate, bl.aggregate);
  std::cout << buf;
  return 0;
}

struct CurveOpts {
  CommonOpts common;
  std::string trace;
  std::vector<std::string> catalogs;
  std::string target_db;
  std::vector<int> k_values{1, 2, 4, 8};
  std::vector<std::uint64_t> seeds{0, 1, 2};
  std::string out;
};

int cmd_curve(const CLI::App& sub, CurveOpts& o) {
  const json cfg = load_config(o.common.config_path);
  merge_common(sub, cfg, o.common);
  merge(sub, cfg, "--k", "k_values", o.k_values);
  merge(sub, cfg, "--seeds", "seeds", o.seeds);
  const zscost::CardSource source = card_source(o.common.cards);

  const zscost::TraceCorpus corpus = load_corpus(o.trace, o.catalogs);
  for (int k : o.k_values)
    if (k >= static_cast<int>(corpus.catalogs.size()))
      throw UsageError("--k " + std::to_string(k) +
                       " must be below the database count (" +
                       std::to_string(corpus.catalogs.size()) + ")");

  const zscost::LearningCurve curve = zscost::learning_curve(
      corpus, o.k_values, o.seeds, o.common.model, source, o.target_db);

  fs::create_directories(o.out);
  write_file((fs::path(o.out) / "learning_curve.json").string(),
             curve.to_json().dump(2) + "\n");
  json resolved = common_to_json(o.common);
  resolved["k_values"] = o.k_values;
  resolved["seeds"] = o.seeds;
  resolved["target_db"] = o.target_db;
  echo_config(o.out, "curve", std::move(resolved));

  std::cout << "k    mean median Q-error (target " << o.target_db << ")\n";
  for (const auto& p : curve.points) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%-4d %.4f (+/- %.4f)\n", p.k,
                  p.mean_median_q, p.std_median_q);
    std::cout << buf;
  }
  return 0;
}

struct FinetuneOpts {
  CommonOpts common;
  std::string model_path;
  std::string trace;
  std::vector<std::string> catalogs;
  std::string out_model;
  zscost::FinetuneConfig ft;
};

int cmd_finetune(const CLI::App& sub, FinetuneOpts& o) {
  const json cfg = load_config(o.common.config_path);
  merge_common(sub, cfg, o.common);
  merge(sub, cfg, "--lr", "lr", o.ft.lr);
  merge(sub, cfg, "--epochs", "epochs", o.ft.epochs);
  merge(sub, cfg, "--batch-size", "batch_size", o.ft.batch_size);
  const zscost::CardSource source = card_source(o.common.cards);
  o.ft.seed = o.common.seed;

  const zscost::ZeroShotModel base = zscost::load_model(o.model_path);
  const zscost::TraceCorpus extra = load_corpus(o.trace, o.catalogs);
  const zscost::ZeroShotModel tuned =
      zscost::finetune(base, extra, o.ft, source);
  zscost::save_model(tuned, o.out_model);

  const std::string out_dir = fs::path(o.out_model).parent_path().string();
  echo_config(out_dir.empty() ? "." : out_dir, "finetune",
              json{{"model", o.model_path},
                   {"out_model", o.out_model},
                   {"lr", o.ft.lr},
                   {"epochs", o.ft.epochs},
                   {"batch_size", o.ft.batch_size},
                   {"seed", o.ft.seed},
                   {"cards", o.common.cards}});
  std::cout << "fine-tuned on " << extra.samples.size() << " samples -> "
            << o.out_model << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zero-shot query cost estimation toolkit"};
  app.require_subcommand(1);

  GenerateOpts gen;
  CLI::App* sub_gen = app.add_subcommand("generate", "generate a synthetic corpus");
  add_common(sub_gen, gen.common, /*with_model_flags=*/false);
  sub_gen->add_option("--out", gen.out, "output directory")->required();
  sub_gen->add_option("--databases", gen.databases);
  sub_gen->add_option("--queries", gen.queries, "queries per database");
  sub_gen->add_option("--modes", gen.modes,
                      "workload modes: standard|complex|index");
  sub_gen->add_option("--noise-sigma", gen.noise_sigma);
  sub_gen->add_option("--timeout", gen.timeout_s);

  TrainOpts tr;
  CLI::App* sub_tr = app.add_subcommand("train", "train a zero-shot model");
  add_common(sub_tr, tr.common);
  sub_tr->add_option("--trace", tr.trace)->required();
  sub_tr->add_option("--catalogs", tr.catalogs, "catalog files or directories")
      ->required();
  sub_tr->add_option("--out-model", tr.out_model)->required();

  PredictOpts pr;
  CLI::App* sub_pr = app.add_subcommand("predict", "per-sample cost estimates");
  add_common(sub_pr, pr.common);
  sub_pr->add_option("--model", pr.model_path)->required();
  sub_pr->add_option("--trace", pr.trace)->required();
  sub_pr->add_option("--catalogs", pr.catalogs)->required();
  sub_pr->add_option("--out", pr.out, "output CSV path")->required();

  EvaluateOpts ev;
  CLI::App* sub_ev = app.add_subcommand("evaluate", "Q-error metrics on a trace");
  add_common(sub_ev, ev.common);
  sub_ev->add_option("--model", ev.model_path)->required();
  sub_ev->add_option("--trace", ev.trace)->required();
  sub_ev->add_option("--catalogs", ev.catalogs)->required();
  sub_ev->add_option("--out", ev.out, "output directory")->required();

  LodoOpts lo;
  CLI::App* sub_lo =
      app.add_subcommand("lodo", "leave-one-database-out evaluation");
  add_common(sub_lo, lo.common);
  sub_lo->add_option("--trace", lo.trace)->required();
  sub_lo->add_option("--catalogs", lo.catalogs)->required();
  sub_lo->add_option("--seeds", lo.seeds);
  sub_lo->add_option("--out", lo.out, "output directory")->required();

  CurveOpts cu;
  CLI::App* sub_cu =
      app.add_subcommand("curve", "learning curve over training databases");
  add_common(sub_cu, cu.common);
  sub_cu->add_option("--trace", cu.trace)->required();
  sub_cu->add_option("--catalogs", cu.catalogs)->required();
  sub_cu->add_option("--target-db", cu.target_db)->required();
  sub_cu->add_option("--k", cu.k_values, "training database counts");
  sub_cu->add_option("--seeds", cu.seeds);
  sub_cu->add_option("--out", cu.out, "output directory")->required();

  FinetuneOpts ft;
  CLI::App* sub_ft =
      app.add_subcommand("finetune", "few-shot fine-tuning of a trained model");
  add_common(sub_ft, ft.common, /*with_model_flags=*/false);
  sub_ft->add_option("--cards", ft.common.cards);
  sub_ft->add_option("--model", ft.model_path)->required();
  sub_ft->add_option("--trace", ft.trace)->required();
  sub_ft->add_option("--catalogs", ft.catalogs)->required();
  sub_ft->add_option("--out-model", ft.out_model)->required();
  sub_ft->add_option("--lr", ft.ft.lr);
  sub_ft->add_option("--epochs", ft.ft.epochs);
  sub_ft->add_option("--batch-size", ft.ft.batch_size);

  LodoOpts bl;
  CLI::App* sub_bl = app.add_subcommand(
      "baseline", "flat-vector baseline vs zero-shot on identical folds");
  add_common(sub_bl, bl.common);
  sub_bl->add_option("--trace", bl.trace)->required();
  sub_bl->add_option("--catalogs", bl.catalogs)->required();
  sub_bl->add_option("--seeds", bl.seeds);
  sub_bl->add_option("--out", bl.out, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sub_gen->parsed()) return cmd_generate(*sub_gen, gen);
    if (sub_tr->parsed()) return cmd_train(*sub_tr, tr);
    if (sub_pr->parsed()) return cmd_predict(*sub_pr, pr);
    if (sub_ev->parsed()) return cmd_evaluate(*sub_ev, ev);
    if (sub_lo->parsed()) return cmd_lodo(*sub_lo, lo, false);
    if (sub_cu->parsed()) return cmd_curve(*sub_cu, cu);
    if (sub_ft->parsed()) return cmd_finetune(*sub_ft, ft);
    if (sub_bl->parsed()) return cmd_lodo(*sub_bl, bl, true);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
