// Command-line driver: validate, train, eval, ablate, sweep-tau, export,
// generate. Exit codes: 0 success, 2 input error, 3 numeric failure.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dgnn/checkpoint.hpp"
#include "dgnn/config.hpp"
#include "dgnn/experiment.hpp"
#include "dgnn/report.hpp"
#include "dgnn/stream_io.hpp"
#include "dgnn/synthetic.hpp"

namespace {

using namespace dgnn;
using nlohmann::json;

constexpr int kExitInput = 2;
constexpr int kExitNumeric = 3;

// Flags that override config-file values; empty strings mean "not given".
struct Overrides {
  std::map<std::string, std::string> values;
  std::vector<std::string> settings;  // raw key=value from --set
  bool no_propagation = false;
  bool no_time_intervals = false;
  bool no_attention = false;
  bool exclude_self = false;
  bool sort = false;

  void attach(CLI::App& cmd) {
    const std::pair<const char*, const char*> keyed[] = {
        {"dim", "embedding size d"},
        {"tau", "propagation window in days"},
        {"negatives", "negative samples per positive (Q)"},
        {"lr", "learning rate"},
        {"batch-size", "events per mini-batch"},
        {"epochs", "passes over the training prefix"},
        {"seed", "random seed"},
        {"optimizer", "adam or sgd"},
        {"feature-mode", "projected or original"},
        {"labeled-fraction", "labeled share of visible nodes (classification)"},
        {"seconds-per-unit", "seconds per engine time unit"},
    };
    for (const auto& [flag, help] : keyed) {
      std::string key = flag;
      for (char& c : key) c = c == '-' ? '_' : c;
      cmd.add_option(std::string("--") + flag, values[key], help);
    }
    cmd.add_option("--set", settings, "extra config setting key=value (repeatable)");
    cmd.add_flag("--no-propagation", no_propagation, "disable neighbor propagation");
    cmd.add_flag("--no-time-intervals", no_time_intervals, "ignore elapsed time in updates");
    cmd.add_flag("--no-attention", no_attention, "uniform propagation weights");
    cmd.add_flag("--exclude-self", exclude_self, "drop the query node from its own candidate list");
    cmd.add_flag("--sort", sort, "sort an unsorted edge stream instead of failing");
  }

  void apply(ExperimentConfig& cfg) const {
    for (const auto& [key, value] : values) {
      if (!value.empty()) apply_setting(cfg, key, value);
    }
    for (const auto& s : settings) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
      apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    if (no_propagation) cfg.run.model.propagation_enabled = false;
    if (no_time_intervals) cfg.run.model.time_intervals_enabled = false;
    if (no_attention) cfg.run.model.attention_enabled = false;
    if (exclude_self) cfg.run.exclude_self = true;
    if (sort) cfg.load.sort = true;
    validate_config(cfg);
  }
};

ExperimentConfig resolve_config(const std::string& path, const Overrides& overrides,
                                ExperimentConfig base = {}) {
  ExperimentConfig cfg = path.empty() ? base : load_config(path, base);
  overrides.apply(cfg);
  return cfg;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw InputError("cannot write " + path);
  return out;
}

// Writes to `path`, or to stdout when it is empty or "-".
template <class F>
void emit(const std::string& path, F&& write) {
  if (path.empty() || path == "-") {
    write(std::cout);
  } else {
    auto out = open_output(path);
    write(out);
  }
}

json lp_json(const LinkPredictionReport& r) {
  return json{{"mrr", r.mrr},
              {"recall_20", r.recall_20},
              {"recall_50", r.recall_50},
              {"pairs", r.pairs},
              {"unseen_pairs", r.unseen_pairs}};
}

json f1_json(const F1Scores& s) { return json{{"f1_micro", s.micro}, {"f1_macro", s.macro}}; }

json model_json(const ExperimentConfig& cfg) {
  const auto& m = cfg.run.model;
  const auto& t = cfg.run.train;
  return json{{"dim", m.dim},
              {"tau", m.tau},
              {"propagation", m.propagation_enabled},
              {"time_intervals", m.time_intervals_enabled},
              {"attention", m.attention_enabled},
              {"negatives", t.negatives},
              {"lr", t.lr},
              {"batch_size", t.batch_size},
              {"epochs", t.epochs},
              {"optimizer", to_string(t.optimizer)},
              {"seed", t.seed},
              {"task", to_string(t.task)},
              {"feature_mode", to_string(cfg.run.feature_mode)}};
}

std::string current_variant(const HyperParams& hp) {
  std::string name = "DGNN";
  if (!hp.propagation_enabled) name += "-prop";
  if (!hp.time_intervals_enabled) name += "-ti";
  if (!hp.attention_enabled) name += "-att";
  return name;
}

void log_epoch(const EpochRecord& r, const char* score_name) {
  std::fprintf(stderr, "epoch %zu  loss %.6f  valid %s %.6f  %.0f events/s\n", r.epoch, r.metrics.mean_loss,
               score_name, r.valid_score, r.metrics.events_per_sec);
}

// ---- validate ----

int cmd_validate(const std::string& path, const Overrides& overrides) {
  ExperimentConfig cfg;
  overrides.apply(cfg);
  const EdgeStream stream = load_edge_stream(path, cfg.load);
  const StreamSummary s = summarize(stream);
  if (s.events == 0) std::fprintf(stderr, "warning: %s contains no events\n", path.c_str());
  std::printf("events %zu\nnodes %zu\nduration_days %s\nsorted %s\n", s.events, s.nodes,
              format_real(s.duration_days).c_str(), s.sorted ? "yes" : "no");
  return 0;
}

// ---- train ----

struct TrainArgs {
  std::string config;
  std::string data;
  std::string labels;
  std::string task;
  std::string out = "dgnn.ckpt";
  std::string metrics;
  std::string results;
  std::string summary;
  std::string ranks;
  std::string resume;
  bool no_timing = false;
};

int cmd_train(const TrainArgs& args, const Overrides& overrides) {
  std::optional<Checkpoint> previous;
  ExperimentConfig base;
  if (!args.resume.empty()) {
    previous = load_checkpoint(args.resume);
    base = previous->config;
  }
  ExperimentConfig cfg = resolve_config(args.config, overrides, base);
  if (!args.task.empty()) {
    apply_setting(cfg, "task", args.task == "lp" ? "link_prediction" : args.task == "nc" ? "node_classification" : args.task);
  }
  if (previous && !(cfg.run.model == previous->config.run.model)) {
    throw ConfigError("resume: model hyperparameters differ from the checkpoint");
  }
  const EdgeStream stream = load_edge_stream(args.data, cfg.load);
  if (previous) check_compatible(*previous, stream.ids);
  std::optional<ResumePoint> resume;
  if (previous) resume = previous->resume;

  const std::string variant = current_variant(cfg.run.model);
  std::vector<ResultRow> rows;
  json summary{{"command", "train"}, {"data", args.data}, {"config", model_json(cfg)}};
  std::vector<EpochRecord> history;
  Checkpoint ckpt;

  if (cfg.run.train.task == Task::link_prediction) {
    auto outcome = run_link_prediction(stream.events, cfg.run, std::move(resume),
                                       [](const EpochRecord& r, const Snapshot&) { log_epoch(r, "mrr"); });
    if (outcome.degenerate_split) std::fprintf(stderr, "warning: fewer than 10 events; splits are degenerate\n");
    history = outcome.history;
    rows = link_prediction_rows(outcome.test, cfg.run.train.seed, variant, cfg.run.model.tau);
    summary["best_epoch"] = outcome.best_epoch;
    summary["valid"] = lp_json(outcome.valid);
    summary["test"] = lp_json(outcome.test);
    if (!args.ranks.empty()) emit(args.ranks, [&](std::ostream& o) { write_ranks_csv(o, outcome.test.ranks, stream.ids); });
    ckpt = make_checkpoint(cfg, stream.ids, outcome);
  } else {
    if (args.labels.empty()) throw ConfigError("node classification needs --labels");
    const NodeLabels labels = load_labels(args.labels, stream.ids);
    if (labels.unknown_nodes > 0) {
      std::fprintf(stderr, "warning: %zu labeled ids do not occur in the stream\n", labels.unknown_nodes);
    }
    if (previous && previous->class_names != labels.class_names) {
      throw CompatibilityError("resume: label classes differ from the checkpoint");
    }
    auto outcome = run_node_classification(stream.events, labels, cfg.run, std::move(resume),
                                           [](const EpochRecord& r, const Snapshot&) { log_epoch(r, "f1"); });
    history = outcome.history;
    rows = classification_rows(outcome.test, cfg.run.train.seed, variant, cfg.run.model.tau);
    summary["best_epoch"] = outcome.best_epoch;
    summary["valid"] = f1_json(outcome.valid);
    summary["test"] = f1_json(outcome.test);
    ckpt = make_checkpoint(cfg, stream.ids, outcome, labels.class_names);
  }

  save_checkpoint(args.out, ckpt);
  if (!args.metrics.empty()) {
    emit(args.metrics, [&](std::ostream& o) { write_metrics_csv(o, history, !args.no_timing); });
  }
  if (!args.results.empty()) emit(args.results, [&](std::ostream& o) { write_results_csv(o, rows); });
  emit(args.summary, [&](std::ostream& o) { o << summary.dump(2) << '\n'; });
  return 0;
}

// ---- eval ----

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string labels;
  std::string split = "test";
  std::string feature_mode;
  std::string results;
  std::string ranks;
  bool exclude_self = false;
};

int cmd_eval(const EvalArgs& args) {
  const Checkpoint ckpt = load_checkpoint(args.checkpoint);
  ExperimentConfig cfg = ckpt.config;
  if (!args.feature_mode.empty()) apply_setting(cfg, "feature_mode", args.feature_mode);
  if (args.exclude_self) cfg.run.exclude_self = true;
  const EdgeStream stream = load_edge_stream(args.data, cfg.load);
  check_compatible(ckpt, stream.ids);
  const FeatureMap features = checkpoint_features(ckpt);
  const ModelParams& params = ckpt.resume.best->state.params;
  const std::string variant = current_variant(cfg.run.model);
  json summary{{"command", "eval"}, {"split", args.split}, {"best_epoch", ckpt.resume.best_epoch}};
  std::vector<ResultRow> rows;

  if (cfg.run.train.task == Task::link_prediction) {
    const TemporalSplit split = temporal_split(stream.events);
    std::span<const InteractionEvent> events;
    if (args.split == "train") {
      events = split.train;
    } else if (args.split == "valid") {
      events = split.valid;
    } else if (args.split == "test") {
      events = split.test;
    } else {
      throw ConfigError("unknown split '" + args.split + "' (expected train, valid or test)");
    }
    const LinkPredictionReport report =
        evaluate_link_prediction(events, features, params, cfg.run.feature_mode, cfg.run.exclude_self);
    summary["metrics"] = lp_json(report);
    rows = link_prediction_rows(report, cfg.run.train.seed, variant, cfg.run.model.tau);
    if (!args.ranks.empty()) emit(args.ranks, [&](std::ostream& o) { write_ranks_csv(o, report.ranks, stream.ids); });
  } else {
    if (args.labels.empty()) throw ConfigError("node classification needs --labels");
    const NodeLabels labels = load_labels(args.labels, stream.ids);
    if (labels.class_names != ckpt.class_names) throw CompatibilityError("label classes differ from the checkpoint");
    const NodeSplit split = node_split(labels.labeled_nodes(), cfg.run.train.labeled_fraction, cfg.run.train.seed);
    const std::vector<NodeId>* nodes = nullptr;
    if (args.split == "train") {
      nodes = &split.train_labeled;
    } else if (args.split == "valid") {
      nodes = &split.valid;
    } else if (args.split == "test") {
      nodes = &split.test;
    } else {
      throw ConfigError("unknown split '" + args.split + "' (expected train, valid or test)");
    }
    const F1Scores scores = evaluate_node_classification(*nodes, features, labels.label_of, params);
    summary["metrics"] = f1_json(scores);
    rows = classification_rows(scores, cfg.run.train.seed, variant, cfg.run.model.tau);
  }
  if (!args.results.empty()) emit(args.results, [&](std::ostream& o) { write_results_csv(o, rows); });
  std::cout << summary.dump(2) << '\n';
  return 0;
}

// ---- ablate / sweep-tau ----

struct StudyArgs {
  std::string config;
  std::string data;
  std::string out;
  std::vector<std::string> variants;
  std::vector<double> taus;
};

int cmd_ablate(const StudyArgs& args, const Overrides& overrides) {
  const ExperimentConfig cfg = resolve_config(args.config, overrides);
  if (cfg.run.train.task != Task::link_prediction) throw ConfigError("ablate runs link prediction only");
  const EdgeStream stream = load_edge_stream(args.data, cfg.load);
  std::vector<Variant> variants;
  const std::vector<std::string> names = args.variants.empty() ? std::vector<std::string>{"prop", "ti", "att"}
                                                               : args.variants;
  for (const auto& name : names) variants.push_back(parse_variant(name));
  const auto rows = run_ablation(stream.events, cfg.run, variants);
  emit(args.out, [&](std::ostream& o) { write_ablation_csv(o, rows); });
  return 0;
}

int cmd_sweep_tau(const StudyArgs& args, const Overrides& overrides) {
  const ExperimentConfig cfg = resolve_config(args.config, overrides);
  if (cfg.run.train.task != Task::link_prediction) throw ConfigError("sweep-tau runs link prediction only");
  for (double tau : args.taus) {
    if (!(tau >= 0.0)) throw ConfigError("tau values must be non-negative");
  }
  const EdgeStream stream = load_edge_stream(args.data, cfg.load);
  const auto rows = run_tau_sweep(stream.events, cfg.run, args.taus.empty() ? default_tau_grid() : args.taus);
  emit(args.out, [&](std::ostream& o) { write_sweep_csv(o, rows); });
  return 0;
}

// ---- export / generate ----

int cmd_export(const std::string& checkpoint, const std::string& out) {
  const Checkpoint ckpt = load_checkpoint(checkpoint);
  const FeatureMap features = checkpoint_features(ckpt);
  emit(out, [&](std::ostream& o) { write_embeddings(o, features, ckpt.ids); });
  return 0;
}

int cmd_generate(const CommunityStreamConfig& sc, const std::string& out) {
  const EdgeStream stream = generate_community_stream(sc);
  emit(out, [&](std::ostream& o) {
    for (std::size_t i = 0; i < stream.events.size(); ++i) {
      o << stream.ids.name(stream.events[i].src) << '\t' << stream.ids.name(stream.events[i].dst) << '\t'
        << stream.timestamps[i] << '\n';
    }
  });
  return 0;
}

int run(int argc, char** argv) {
  CLI::App app{"Streaming dynamic graph neural network: training and evaluation"};
  app.require_subcommand(1);

  auto* validate = app.add_subcommand("validate", "check an edge stream and print its statistics");
  std::string validate_path;
  Overrides validate_overrides;
  validate->add_option("path", validate_path, "edge stream file")->required();
  validate->add_flag("--sort", validate_overrides.sort, "accept unsorted input");
  validate->add_option("--seconds-per-unit", validate_overrides.values["seconds_per_unit"],
                       "seconds per engine time unit");

  auto* train = app.add_subcommand("train", "train a model and write a checkpoint");
  TrainArgs train_args;
  Overrides train_overrides;
  train->add_option("--data", train_args.data, "edge stream file")->required();
  train->add_option("--config", train_args.config, "key = value config file");
  train->add_option("--task", train_args.task, "lp or nc");
  train->add_option("--labels", train_args.labels, "node label file (classification)");
  train->add_option("--out", train_args.out, "checkpoint to write")->capture_default_str();
  train->add_option("--metrics", train_args.metrics, "per-epoch metrics CSV");
  train->add_option("--results", train_args.results, "test results CSV");
  train->add_option("--summary", train_args.summary, "JSON summary (stdout by default)");
  train->add_option("--ranks", train_args.ranks, "per-pair test ranks CSV");
  train->add_option("--resume", train_args.resume, "continue from this checkpoint");
  train->add_flag("--no-timing", train_args.no_timing, "write 0 for throughput in the metrics CSV");
  train_overrides.attach(*train);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on one split");
  EvalArgs eval_args;
  eval->add_option("--checkpoint", eval_args.checkpoint, "checkpoint file")->required();
  eval->add_option("--data", eval_args.data, "edge stream file")->required();
  eval->add_option("--labels", eval_args.labels, "node label file (classification)");
  eval->add_option("--split", eval_args.split, "train, valid or test")->capture_default_str();
  eval->add_option("--feature-mode", eval_args.feature_mode, "projected or original");
  eval->add_option("--results", eval_args.results, "results CSV");
  eval->add_option("--ranks", eval_args.ranks, "per-pair ranks CSV");
  eval->add_flag("--exclude-self", eval_args.exclude_self, "drop the query node from its candidates");

  auto* ablate = app.add_subcommand("ablate", "train the full model and ablated variants");
  StudyArgs ablate_args;
  Overrides ablate_overrides;
  ablate->add_option("--data", ablate_args.data, "edge stream file")->required();
  ablate->add_option("--config", ablate_args.config, "key = value config file");
  ablate->add_option("--variants", ablate_args.variants, "subset of prop,ti,att")->delimiter(',');
  ablate->add_option("--out", ablate_args.out, "CSV output (stdout by default)");
  ablate_overrides.attach(*ablate);

  auto* sweep = app.add_subcommand("sweep-tau", "train once per tau and report test MRR");
  StudyArgs sweep_args;
  Overrides sweep_overrides;
  sweep->add_option("--data", sweep_args.data, "edge stream file")->required();
  sweep->add_option("--config", sweep_args.config, "key = value config file");
  sweep->add_option("--taus", sweep_args.taus, "comma-separated tau values in days")->delimiter(',');
  sweep->add_option("--out", sweep_args.out, "CSV output (stdout by default)");
  sweep_overrides.attach(*sweep);

  auto* exporter = app.add_subcommand("export", "write node features of a checkpoint");
  std::string export_ckpt;
  std::string export_out;
  exporter->add_option("--checkpoint", export_ckpt, "checkpoint file")->required();
  exporter->add_option("--out", export_out, "output file (stdout by default)");

  auto* generate = app.add_subcommand("generate", "write a synthetic community edge stream");
  CommunityStreamConfig gen;
  std::string gen_out;
  generate->add_option("--nodes", gen.nodes)->capture_default_str();
  generate->add_option("--events", gen.events)->capture_default_str();
  generate->add_option("--communities", gen.communities)->capture_default_str();
  generate->add_option("--intra", gen.intra_fraction, "share of within-community events")->capture_default_str();
  generate->add_option("--popularity", gen.popularity_exponent, "target popularity exponent")->capture_default_str();
  generate->add_option("--mean-gap", gen.mean_gap_seconds, "mean seconds between events")->capture_default_str();
  generate->add_option("--seed", gen.seed)->capture_default_str();
  generate->add_option("--out", gen_out, "output file (stdout by default)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInput;
  }

  if (*validate) return cmd_validate(validate_path, validate_overrides);
  if (*train) return cmd_train(train_args, train_overrides);
  if (*eval) return cmd_eval(eval_args);
  if (*ablate) return cmd_ablate(ablate_args, ablate_overrides);
  if (*sweep) return cmd_sweep_tau(sweep_args, sweep_overrides);
  if (*exporter) return cmd_export(export_ckpt, export_out);
  if (*generate) return cmd_generate(gen, gen_out);
  return kExitInput;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const dgnn::InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const dgnn::nd::NumericError& e) {
    std::fprintf(stderr, "numeric failure: %s\n", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    // Invalid arguments, ordering and domain errors all stem from the input.
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  }
}
