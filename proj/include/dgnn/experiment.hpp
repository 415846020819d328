#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dgnn/eval.hpp"
#include "dgnn/stream_io.hpp"
#include "dgnn/training.hpp"

namespace dgnn {

enum class Variant { full, no_prop, no_ti, no_att };

std::string variant_name(Variant v);  // "DGNN", "DGNN-prop", ...
Variant parse_variant(const std::string& token);  // "full", "prop", "ti", "att"
HyperParams apply_variant(HyperParams hp, Variant v);

struct RunConfig {
  HyperParams model;
  TrainConfig train;
  FeatureMode feature_mode = FeatureMode::projected;
  bool exclude_self = false;

  bool operator==(const RunConfig&) const = default;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  EpochMetrics metrics;
  double valid_score = 0.0;  // MRR or F1-micro
};

// A model and the store it produced at the end of some epoch.
struct Snapshot {
  TrainingState state;
  GraphStore store;
};

struct LinkPredictionOutcome {
  std::vector<EpochRecord> history{};
  std::size_t best_epoch = 0;
  double best_score = 0.0;
  Snapshot best;
  Snapshot last;
  LinkPredictionReport valid{};  // at the best epoch
  LinkPredictionReport test{};
  bool degenerate_split = false;
};

using EpochCallback = std::function<void(const EpochRecord&, const Snapshot&)>;

// Where an interrupted run picks up: the state after `state.epochs_done`
// epochs and the best epoch seen so far (best_epoch 0 means none).
struct ResumePoint {
  TrainingState state;
  std::size_t best_epoch = 0;
  double best_score = 0.0;
  std::optional<Snapshot> best{};
};

// Trains on the first 80% of the stream and picks the epoch with the best
// validation MRR. Epochs already done in `resume` count toward
// cfg.train.epochs.
LinkPredictionOutcome run_link_prediction(std::span<const InteractionEvent> stream, const RunConfig& cfg,
                                          std::optional<ResumePoint> resume = std::nullopt,
                                          const EpochCallback& on_epoch = {});

// Ranking metrics of the untrained model: features as initialized for every
// node seen in the training prefix.
LinkPredictionReport evaluate_initial_features(std::span<const InteractionEvent> stream, const RunConfig& cfg);

struct NodeClassificationOutcome {
  std::vector<EpochRecord> history{};
  std::size_t best_epoch = 0;
  double best_score = 0.0;
  Snapshot best;
  Snapshot last;
  NodeSplit split{};
  F1Scores valid{};
  F1Scores test{};
};

NodeClassificationOutcome run_node_classification(std::span<const InteractionEvent> stream,
                                                  const NodeLabels& labels, const RunConfig& cfg,
                                                  std::optional<ResumePoint> resume = std::nullopt,
                                                  const EpochCallback& on_epoch = {});

struct AblationRow {
  Variant variant = Variant::full;
  LinkPredictionReport test;
};
std::vector<AblationRow> run_ablation(std::span<const InteractionEvent> stream, const RunConfig& cfg,
                                      std::span<const Variant> variants);

struct SweepRow {
  double tau = 0.0;
  LinkPredictionReport test;
};
std::vector<double> default_tau_grid();  // 1, 7, 10, 20, ..., 100
std::vector<SweepRow> run_tau_sweep(std::span<const InteractionEvent> stream, const RunConfig& cfg,
                                    std::vector<double> taus);

}  // namespace dgnn
