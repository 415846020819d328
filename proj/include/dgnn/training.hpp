#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "dgnn/engine.hpp"
#include "dgnn/graph_store.hpp"
#include "dgnn/model.hpp"

namespace dgnn {

enum class Task { link_prediction, node_classification };
enum class OptimizerKind { adam, sgd };

struct TrainConfig {
  std::size_t batch_size = 200;
  std::size_t negatives = 5;  // Q
  double lr = 1e-3;
  std::size_t epochs = 5;
  OptimizerKind optimizer = OptimizerKind::adam;
  std::uint64_t seed = 0;
  Task task = Task::link_prediction;
  double labeled_fraction = 1.0;  // x, node classification only
  // Use log sigma(+score) for negatives instead of log sigma(-score).
  bool literal_negative_term = false;

  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

struct OptimizerState {
  ModelParams first_moment;
  ModelParams second_moment;
  std::uint64_t step = 0;
};

class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Tensor project_lp(const Tensor& u, Role role, const ModelParams& p);

// -log sigma(<P^s u_src, P^g u_dst>) - sum_n log sigma(-<P^s u_src, P^g u_n>)
ValueId lp_loss(nd::Tape& tape, const ParamVars& p, ValueId u_src, ValueId u_dst,
                std::span<const ValueId> u_negatives, bool literal_negative_term = false);
double lp_loss(const Tensor& u_src, const Tensor& u_dst, std::span<const Tensor> u_negatives,
               const ModelParams& p, bool literal_negative_term = false);

// Q uniform draws with replacement from candidates minus `positive`.
std::vector<NodeId> sample_negatives(std::span<const NodeId> candidates, NodeId positive, std::size_t q,
                                     std::mt19937_64& rng);

// Interacting nodes of every event in the batch plus their neighbors at the
// time of each event, ascending. Neighbors gained inside the batch are batch
// endpoints already, so the pre-batch adjacency suffices.
std::vector<NodeId> batch_candidates(std::span<const InteractionEvent> batch, const GraphStore& store);

ValueId nc_loss(nd::Tape& tape, const ParamVars& p, ValueId u, std::size_t label);
double nc_loss(const Tensor& u, const Tensor& y_one_hot, const ModelParams& p);
double nc_loss(const Tensor& u, std::size_t label, const ModelParams& p);
std::vector<double> class_scores(const Tensor& u, const ModelParams& p);

std::vector<std::span<const InteractionEvent>> make_minibatches(std::span<const InteractionEvent> stream,
                                                                std::size_t batch_size);

OptimizerState make_optimizer_state(const ModelParams& p);
void optimizer_step(ModelParams& p, const ModelParams& grads, OptimizerState& state, double lr,
                    OptimizerKind kind = OptimizerKind::adam);

// Everything that evolves across epochs.
struct TrainingState {
  ModelParams params;
  OptimizerState optimizer;
  std::mt19937_64 rng;
  std::size_t epochs_done = 0;
};

TrainingState make_training_state(const HyperParams& hp, const TrainConfig& cfg, std::size_t num_classes);

struct EpochMetrics {
  double mean_loss = 0.0;
  double events_per_sec = 0.0;
  std::size_t batches = 0;
  std::size_t loss_terms = 0;
};

// Node classification supervision: labels of the training nodes only.
using TrainLabels = std::unordered_map<NodeId, std::size_t>;

// Builds the loss of one batch on the session's tape, processing the batch's
// events as it goes. Link prediction scores each event from u(t-) before the
// event is processed; node classification scores labeled involved nodes
// after the whole batch. Returns the loss id (nullopt when the batch has no
// loss terms) and the number of terms.
struct BatchLoss {
  std::optional<ValueId> loss;
  std::size_t terms = 0;
};
BatchLoss build_batch_loss(Session& session, std::span<const InteractionEvent> batch, const TrainConfig& cfg,
                           std::mt19937_64& rng, const TrainLabels* labels);

// One pass over the stream. Resets the store, then per batch: build the loss,
// backpropagate, step the optimizer and detach the node states.
EpochMetrics train_epoch(std::span<const InteractionEvent> stream, GraphStore& store, TrainingState& state,
                         const HyperParams& hp, const TrainConfig& cfg, const TrainLabels* labels = nullptr);

}  // namespace dgnn
