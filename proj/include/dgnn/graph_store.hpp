#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dgnn/ndmath.hpp"

namespace dgnn {

using NodeId = std::uint32_t;
using nd::Tensor;

// One directed timestamped edge. Time is in engine units (days).
struct InteractionEvent {
  NodeId src = 0;
  NodeId dst = 0;
  double time = 0.0;
  bool operator==(const InteractionEvent&) const = default;
};

// Per-node recurrent state: source-role and target-role cell memory and hidden
// state, plus the merged general features u.
struct NodeState {
  Tensor c_src;
  Tensor h_src;
  Tensor c_dst;
  Tensor h_dst;
  Tensor u;
  std::optional<double> last_event_time;
  bool operator==(const NodeState&) const = default;
};

struct Neighbor {
  NodeId id = 0;
  double time = 0.0;
  bool operator==(const Neighbor&) const = default;
};

// Neighbor lists of the two interacting nodes as of just before an event.
struct InfluencedNodes {
  std::vector<Neighbor> src_sources;
  std::vector<Neighbor> src_targets;
  std::vector<Neighbor> dst_sources;
  std::vector<Neighbor> dst_targets;

  bool empty() const {
    return src_sources.empty() && src_targets.empty() && dst_sources.empty() && dst_targets.empty();
  }
};

class OrderingError : public std::runtime_error {
 public:
  OrderingError(double last, double got);
  double last_time() const { return last_; }
  double event_time() const { return got_; }

 private:
  double last_;
  double got_;
};

class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// Evolving temporal graph plus the per-node state store. Nodes are dense
// indices; a node's initial state depends only on (seed, node id), so the
// store can be rebuilt identically in any registration order.
class GraphStore {
 public:
  using NeighborMap = std::map<NodeId, double>;

  GraphStore(std::size_t dim, std::uint64_t seed);

  std::size_t dim() const { return dim_; }
  std::uint64_t seed() const { return seed_; }

  // Registers v with a randomly initialized state; no-op when present.
  void register_node(NodeId v);
  bool contains(NodeId v) const { return v < slots_.size() && slots_[v].has_value(); }
  std::size_t node_count() const { return count_; }
  std::vector<NodeId> nodes() const;

  // Throws OrderingError when ev precedes the last applied event.
  void check_order(const InteractionEvent& ev) const;
  // Registers unseen endpoints, refreshes both adjacency maps to ev.time and
  // sets last_event_time of both endpoints.
  void add_event(const InteractionEvent& ev);
  std::optional<double> current_time() const { return current_time_; }

  // Computed against the graph before ev is applied. Both interacting nodes
  // are excluded from all four lists.
  InfluencedNodes influenced_nodes(const InteractionEvent& ev) const;

  // N_s(v): u with an edge u -> v. N_g(v): u with an edge v -> u.
  const NeighborMap& source_neighbors(NodeId v) const { return slot(v).sources; }
  const NeighborMap& target_neighbors(NodeId v) const { return slot(v).targets; }

  const NodeState& state(NodeId v) const { return slot(v).state; }
  void set_state(NodeId v, NodeState state);

  // Drops every node, edge and state.
  void reset();

  NodeState initial_state(NodeId v) const;

  bool operator==(const GraphStore& other) const;

 private:
  struct Slot {
    NodeState state;
    NeighborMap sources;
    NeighborMap targets;
    bool operator==(const Slot&) const = default;
  };

  const Slot& slot(NodeId v) const;
  Slot& slot(NodeId v);

  std::size_t dim_;
  std::uint64_t seed_;
  std::vector<std::optional<Slot>> slots_;
  std::size_t count_ = 0;
  std::optional<double> current_time_;
};

}  // namespace dgnn
