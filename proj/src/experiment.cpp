#include "dgnn/experiment.hpp"

#include <algorithm>
#include <stdexcept>

namespace dgnn {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::full:
      return "DGNN";
    case Variant::no_prop:
      return "DGNN-prop";
    case Variant::no_ti:
      return "DGNN-ti";
    case Variant::no_att:
      return "DGNN-att";
  }
  return "?";
}

Variant parse_variant(const std::string& token) {
  if (token == "full" || token == "dgnn") return Variant::full;
  if (token == "prop") return Variant::no_prop;
  if (token == "ti") return Variant::no_ti;
  if (token == "att") return Variant::no_att;
  throw std::invalid_argument("unknown variant '" + token + "' (expected prop, ti or att)");
}

HyperParams apply_variant(HyperParams hp, Variant v) {
  switch (v) {
    case Variant::full:
      break;
    case Variant::no_prop:
      hp.propagation_enabled = false;
      break;
    case Variant::no_ti:
      hp.time_intervals_enabled = false;
      break;
    case Variant::no_att:
      hp.attention_enabled = false;
      break;
  }
  return hp;
}

namespace {

struct BestTracker {
  std::size_t epoch = 0;
  double score = 0.0;
  std::optional<Snapshot> snapshot;
};

BestTracker tracker_from(const std::optional<ResumePoint>& resume) {
  BestTracker best;
  if (resume && resume->best_epoch > 0 && resume->best) {
    best.epoch = resume->best_epoch;
    best.score = resume->best_score;
    best.snapshot = resume->best;
  }
  return best;
}

// Runs the remaining epochs; `score` maps the end-of-epoch store to the
// validation criterion. Ties keep the earlier epoch.
template <class Score>
Snapshot train_epochs(std::span<const InteractionEvent> train, TrainingState& state, GraphStore& store,
                      const RunConfig& cfg, const TrainLabels* labels, BestTracker& best,
                      std::vector<EpochRecord>& history, const EpochCallback& on_epoch, Score score) {
  while (state.epochs_done < cfg.train.epochs) {
    EpochRecord record;
    record.metrics = train_epoch(train, store, state, cfg.model, cfg.train, labels);
    record.epoch = state.epochs_done;
    record.valid_score = score(store, state.params);
    history.push_back(record);
    Snapshot current{state, store};
    if (on_epoch) on_epoch(record, current);
    if (!best.snapshot || record.valid_score > best.score) {
      best.epoch = record.epoch;
      best.score = record.valid_score;
      best.snapshot = current;
    }
  }
  if (!best.snapshot) {
    // Nothing was left to train: score the given state as is.
    store.reset();
    process_stream(train, store, state.params, cfg.model);
    best.epoch = state.epochs_done;
    best.score = score(store, state.params);
    best.snapshot = Snapshot{state, store};
  }
  return Snapshot{state, store};
}

}  // namespace

LinkPredictionOutcome run_link_prediction(std::span<const InteractionEvent> stream, const RunConfig& cfg,
                                          std::optional<ResumePoint> resume, const EpochCallback& on_epoch) {
  if (cfg.train.task != Task::link_prediction) throw std::invalid_argument("run_link_prediction: wrong task");
  const TemporalSplit split = temporal_split(stream);
  BestTracker best = tracker_from(resume);
  TrainingState state = resume ? std::move(resume->state) : make_training_state(cfg.model, cfg.train, 0);
  GraphStore store(cfg.model.dim, cfg.train.seed);

  std::vector<EpochRecord> history;
  auto score = [&](const GraphStore& s, const ModelParams& p) {
    return evaluate_link_prediction(split.valid, features_of(s), p, cfg.feature_mode, cfg.exclude_self).mrr;
  };
  Snapshot last = train_epochs(split.train, state, store, cfg, nullptr, best, history, on_epoch, score);

  LinkPredictionOutcome out{.best = std::move(*best.snapshot), .last = std::move(last)};
  out.history = std::move(history);
  out.best_epoch = best.epoch;
  out.best_score = best.score;
  out.degenerate_split = split.degenerate;
  const FeatureMap features = features_of(out.best.store);
  out.valid = evaluate_link_prediction(split.valid, features, out.best.state.params, cfg.feature_mode,
                                       cfg.exclude_self);
  out.test = evaluate_link_prediction(split.test, features, out.best.state.params, cfg.feature_mode,
                                      cfg.exclude_self);
  return out;
}

LinkPredictionReport evaluate_initial_features(std::span<const InteractionEvent> stream, const RunConfig& cfg) {
  const TemporalSplit split = temporal_split(stream);
  const TrainingState state = make_training_state(cfg.model, cfg.train, 0);
  GraphStore store(cfg.model.dim, cfg.train.seed);
  for (const auto& ev : split.train) {
    store.register_node(ev.src);
    store.register_node(ev.dst);
  }
  return evaluate_link_prediction(split.test, features_of(store), state.params, cfg.feature_mode,
                                  cfg.exclude_self);
}

NodeClassificationOutcome run_node_classification(std::span<const InteractionEvent> stream,
                                                  const NodeLabels& labels, const RunConfig& cfg,
                                                  std::optional<ResumePoint> resume,
                                                  const EpochCallback& on_epoch) {
  if (cfg.train.task != Task::node_classification) {
    throw std::invalid_argument("run_node_classification: wrong task");
  }
  if (labels.num_classes() == 0) throw std::invalid_argument("run_node_classification: no labels");
  NodeSplit split = node_split(labels.labeled_nodes(), cfg.train.labeled_fraction, cfg.train.seed);
  TrainLabels train_labels;
  for (NodeId v : split.train_labeled) train_labels.emplace(v, labels.label_of.at(v));

  BestTracker best = tracker_from(resume);
  TrainingState state =
      resume ? std::move(resume->state) : make_training_state(cfg.model, cfg.train, labels.num_classes());
  GraphStore store(cfg.model.dim, cfg.train.seed);

  std::vector<EpochRecord> history;
  auto score = [&](const GraphStore& s, const ModelParams& p) {
    return evaluate_node_classification(split.valid, features_of(s), labels.label_of, p).micro;
  };
  Snapshot last = train_epochs(stream, state, store, cfg, &train_labels, best, history, on_epoch, score);

  NodeClassificationOutcome out{.best = std::move(*best.snapshot), .last = std::move(last)};
  out.history = std::move(history);
  out.best_epoch = best.epoch;
  out.best_score = best.score;
  const FeatureMap features = features_of(out.best.store);
  out.valid = evaluate_node_classification(split.valid, features, labels.label_of, out.best.state.params);
  out.test = evaluate_node_classification(split.test, features, labels.label_of, out.best.state.params);
  out.split = std::move(split);
  return out;
}

std::vector<AblationRow> run_ablation(std::span<const InteractionEvent> stream, const RunConfig& cfg,
                                      std::span<const Variant> variants) {
  std::vector<Variant> order{Variant::full};
  for (Variant v : variants) {
    if (std::find(order.begin(), order.end(), v) == order.end()) order.push_back(v);
  }
  std::vector<AblationRow> rows;
  for (Variant v : order) {
    RunConfig run = cfg;
    run.model = apply_variant(cfg.model, v);
    rows.push_back(AblationRow{v, run_link_prediction(stream, run).test});
  }
  return rows;
}

std::vector<double> default_tau_grid() {
  std::vector<double> grid{1.0, 7.0};
  for (int t = 10; t <= 100; t += 10) grid.push_back(t);
  return grid;
}

std::vector<SweepRow> run_tau_sweep(std::span<const InteractionEvent> stream, const RunConfig& cfg,
                                    std::vector<double> taus) {
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
  std::vector<SweepRow> rows;
  for (double tau : taus) {
    RunConfig run = cfg;
    run.model.tau = tau;
    rows.push_back(SweepRow{tau, run_link_prediction(stream, run).test});
  }
  return rows;
}

}  // namespace dgnn
