#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "dgnn/graph_store.hpp"
#include "dgnn/model.hpp"

namespace dgnn {

enum class Direction { rank_targets, rank_sources };
enum class FeatureMode { projected, original };

struct TestPair {
  NodeId query = 0;
  NodeId truth = 0;
  Direction direction = Direction::rank_targets;
  double time = 0.0;
  bool operator==(const TestPair&) const = default;
};

struct RankResult {
  TestPair pair;
  std::size_t rank = 1;
  std::size_t candidates = 0;
};

class EvaluationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Each test edge gives (fix src, rank targets) and (fix dst, rank sources).
std::vector<TestPair> make_test_pairs(std::span<const InteractionEvent> events);

using FeatureMap = std::unordered_map<NodeId, Tensor>;

// General features of every registered node.
FeatureMap features_of(const GraphStore& store);

// Ranks all candidates by cosine similarity against the query. Projected
// mode compares P^s u with P^g u in the orientation of the pair; original
// mode compares raw u. Ties do not worsen the rank; zero-norm vectors score 0.
class Ranker {
 public:
  Ranker(const FeatureMap& features, const ModelParams& params, FeatureMode mode, bool exclude_self = false);

  // Throws EvaluationError when the query or truth has no features.
  RankResult rank(const TestPair& pair) const;
  bool knows(NodeId v) const { return index_.count(v) > 0; }
  std::size_t size() const { return ids_.size(); }
  // Cosine score between a query and a candidate, in the pair's orientation.
  double score(const TestPair& pair, NodeId candidate) const;

 private:
  std::vector<NodeId> ids_;  // ascending
  std::unordered_map<NodeId, std::size_t> index_;
  std::vector<Tensor> as_source_;  // unit vectors (or zero)
  std::vector<Tensor> as_target_;
  bool exclude_self_;
};

RankResult rank_candidates(const TestPair& pair, const FeatureMap& features, FeatureMode mode,
                           const ModelParams& params, bool exclude_self = false);

double mrr(std::span<const RankResult> results);
double recall_at_k(std::span<const RankResult> results, std::size_t k);

struct F1Scores {
  double micro = 0.0;
  double macro = 0.0;
};
F1Scores f1_scores(std::span<const std::size_t> predicted, std::span<const std::size_t> truth,
                   std::size_t num_classes);

struct TemporalSplit {
  std::span<const InteractionEvent> train;
  std::span<const InteractionEvent> valid;
  std::span<const InteractionEvent> test;
  bool degenerate = false;  // fewer than 10 events
};
TemporalSplit temporal_split(std::span<const InteractionEvent> stream);

struct NodeSplit {
  std::vector<NodeId> valid;
  std::vector<NodeId> test;
  std::vector<NodeId> train_labeled;
  std::vector<NodeId> train_unlabeled;
};
// Hides 20% of the labeled nodes (half valid, half test); x = labeled_fraction
// of the visible rest keep their labels for training.
NodeSplit node_split(std::span<const NodeId> labeled_nodes, double labeled_fraction, std::uint64_t seed);

struct LinkPredictionReport {
  double mrr = 0.0;
  double recall_20 = 0.0;
  double recall_50 = 0.0;
  std::size_t pairs = 0;
  std::size_t unseen_pairs = 0;
  std::vector<RankResult> ranks;
};

LinkPredictionReport evaluate_link_prediction(std::span<const InteractionEvent> test_events,
                                              const FeatureMap& features, const ModelParams& params,
                                              FeatureMode mode, bool exclude_self = false);

std::size_t predict_class(const Tensor& u, const ModelParams& params);

F1Scores evaluate_node_classification(std::span<const NodeId> nodes, const FeatureMap& features,
                                      const std::unordered_map<NodeId, std::size_t>& labels,
                                      const ModelParams& params);

}  // namespace dgnn
