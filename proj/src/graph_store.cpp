#include "dgnn/graph_store.hpp"

#include <random>
#include <sstream>

namespace dgnn {

namespace {

std::string ordering_message(double last, double got) {
  std::ostringstream out;
  out.precision(17);
  out << "event at time " << got << " precedes last applied event at time " << last;
  return out.str();
}

void collect(const GraphStore::NeighborMap& from, NodeId a, NodeId b, std::vector<Neighbor>& out) {
  out.reserve(from.size());
  for (const auto& [id, time] : from) {
    if (id == a || id == b) continue;
    out.push_back(Neighbor{id, time});
  }
}

}  // namespace

OrderingError::OrderingError(double last, double got)
    : std::runtime_error(ordering_message(last, got)), last_(last), got_(got) {}

GraphStore::GraphStore(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim == 0) throw nd::DomainError("graph store: dimension must be at least 1");
}

NodeState GraphStore::initial_state(NodeId v) const {
  std::seed_seq seq{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32),
                    static_cast<std::uint32_t>(v)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> dist(-0.1, 0.1);
  auto draw = [&]() {
    Tensor t({dim_});
    for (double& x : t.values()) x = dist(rng);
    return t;
  };
  NodeState s;
  s.c_src = draw();
  s.h_src = draw();
  s.c_dst = draw();
  s.h_dst = draw();
  s.u = draw();
  return s;
}

void GraphStore::register_node(NodeId v) {
  if (contains(v)) return;
  if (v >= slots_.size()) slots_.resize(static_cast<std::size_t>(v) + 1);
  slots_[v] = Slot{initial_state(v), {}, {}};
  ++count_;
}

std::vector<NodeId> GraphStore::nodes() const {
  std::vector<NodeId> out;
  out.reserve(count_);
  for (std::size_t i = 0; i < slots_.size(); ++i) {
    if (slots_[i]) out.push_back(static_cast<NodeId>(i));
  }
  return out;
}

void GraphStore::check_order(const InteractionEvent& ev) const {
  if (current_time_ && ev.time < *current_time_) throw OrderingError(*current_time_, ev.time);
}

void GraphStore::add_event(const InteractionEvent& ev) {
  check_order(ev);
  register_node(ev.src);
  register_node(ev.dst);
  slot(ev.src).targets[ev.dst] = ev.time;
  slot(ev.dst).sources[ev.src] = ev.time;
  slot(ev.src).state.last_event_time = ev.time;
  slot(ev.dst).state.last_event_time = ev.time;
  current_time_ = ev.time;
}

InfluencedNodes GraphStore::influenced_nodes(const InteractionEvent& ev) const {
  InfluencedNodes out;
  if (contains(ev.src)) {
    collect(slot(ev.src).sources, ev.src, ev.dst, out.src_sources);
    collect(slot(ev.src).targets, ev.src, ev.dst, out.src_targets);
  }
  if (contains(ev.dst)) {
    collect(slot(ev.dst).sources, ev.src, ev.dst, out.dst_sources);
    collect(slot(ev.dst).targets, ev.src, ev.dst, out.dst_targets);
  }
  return out;
}

void GraphStore::set_state(NodeId v, NodeState state) {
  Slot& s = slot(v);
  for (const Tensor* t : {&state.c_src, &state.h_src, &state.c_dst, &state.h_dst, &state.u}) {
    if (t->shape() != nd::Shape{dim_}) {
      throw nd::DimensionError("set_state: expected " + nd::shape_string({dim_}) + ", got " +
                               nd::shape_string(t->shape()));
    }
  }
  s.state = std::move(state);
}

void GraphStore::reset() {
  slots_.clear();
  count_ = 0;
  current_time_.reset();
}

bool GraphStore::operator==(const GraphStore& other) const {
  return dim_ == other.dim_ && seed_ == other.seed_ && count_ == other.count_ &&
         current_time_ == other.current_time_ && slots_ == other.slots_;
}

const GraphStore::Slot& GraphStore::slot(NodeId v) const {
  if (!contains(v)) throw LookupError("graph store: unknown node " + std::to_string(v));
  return *slots_[v];
}

GraphStore::Slot& GraphStore::slot(NodeId v) {
  if (!contains(v)) throw LookupError("graph store: unknown node " + std::to_string(v));
  return *slots_[v];
}

}  // namespace dgnn
