#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "dgnn/graph_store.hpp"
#include "dgnn/model.hpp"

namespace dgnn {

enum class Role { source, target };

struct EngineStats {
  std::size_t events = 0;
  std::size_t propagations = 0;  // neighbor state updates actually applied
  std::size_t filtered = 0;      // neighbors dropped by the time filter
};

// Observation hooks for tests and instrumentation.
struct Probe {
  std::function<void(double dt, double decay)> on_decay;
  std::function<void(PropKind kind, std::span<const double> weights)> on_attention;
};

struct PropagationUpdate {
  NodeId node = 0;
  Role role = Role::source;
  Tensor c;
  Tensor h;
};

// Streams events through the model while recording on a tape. States touched
// since the last detach are held as tape values; everything else is read from
// the store as constants. After each event the store holds the new values,
// so detaching only drops gradient history.
class Session {
 public:
  Session(GraphStore& store, const ModelParams& params, const HyperParams& hp, bool trainable);

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  nd::Tape& tape() { return tape_; }
  const ParamVars& params() const { return vars_; }
  const GraphStore& store() const { return store_; }

  // Traced u(t-) of v; registers v when unseen.
  ValueId features(NodeId v);

  void process_event(const InteractionEvent& ev);

  // Propagates e into one role-neighbor list of center. Attention is computed
  // over `neighbors` (the full role-neighbor set); entries equal to `skip_a`
  // or `skip_b` receive no update. Returns the applied updates.
  std::vector<PropagationUpdate> propagate(ValueId e, NodeId center, ValueId u_center, PropKind kind,
                                           const GraphStore::NeighborMap& neighbors, double time,
                                           NodeId skip_a, NodeId skip_b);

  // Attention weights (or uniform factors) for the neighbors of one list that
  // pass the time filter, computed from the current, i.e. pre-event, u.
  struct PropagationPlan {
    PropKind kind = PropKind::src_to_sources;
    std::vector<Neighbor> targets;
    std::vector<double> decays;
    std::vector<ValueId> weights;  // traced attention weights, when enabled
    double uniform = 0.0;          // 1/|neighbors| when attention is disabled
  };
  PropagationPlan plan_propagation(NodeId center, ValueId u_center, PropKind kind,
                                   const GraphStore::NeighborMap& neighbors, double time, NodeId skip_a,
                                   NodeId skip_b);
  std::vector<PropagationUpdate> apply_propagation(const PropagationPlan& plan, ValueId e);

  // Severs gradient history: clears the tape and rebinds parameters.
  void detach();
  void rebind(const ModelParams& params);

  const EngineStats& stats() const { return stats_; }
  void set_probe(Probe probe) { probe_ = std::move(probe); }

 private:
  struct Traced {
    ValueId c_src;
    ValueId h_src;
    ValueId c_dst;
    ValueId h_dst;
    ValueId u;
  };

  Traced& traced(NodeId v);
  ValueId update_role(NodeId v, Role role, ValueId e, double dt);
  void write_back(NodeId v);
  double decay(double dt) const;

  GraphStore& store_;
  const ModelParams* model_;
  HyperParams hp_;
  bool trainable_;
  nd::Tape tape_;
  ParamVars vars_;
  std::unordered_map<NodeId, Traced> traced_;
  EngineStats stats_;
  Probe probe_;
};

// Untraced processing of a single event.
void process_event(const InteractionEvent& ev, GraphStore& store, const ModelParams& params,
                   const HyperParams& hp);

// Untraced processing of a stream; returns the accumulated statistics.
EngineStats process_stream(std::span<const InteractionEvent> events, GraphStore& store,
                           const ModelParams& params, const HyperParams& hp, const Probe& probe = {});

}  // namespace dgnn
