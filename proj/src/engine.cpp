#include "dgnn/engine.hpp"

#include <set>

namespace dgnn {

namespace {

Role neighbor_role(PropKind kind) {
  return kind == PropKind::src_to_sources || kind == PropKind::dst_to_sources ? Role::source : Role::target;
}

constexpr std::size_t kUntracedDetachInterval = 256;

}  // namespace

Session::Session(GraphStore& store, const ModelParams& params, const HyperParams& hp, bool trainable)
    : store_(store), model_(&params), hp_(hp), trainable_(trainable) {
  hp_.validate();
  vars_ = bind_params(tape_, params, trainable_);
}

void Session::detach() {
  traced_.clear();
  tape_.clear();
  vars_ = bind_params(tape_, *model_, trainable_);
}

void Session::rebind(const ModelParams& params) {
  model_ = &params;
  detach();
}

double Session::decay(double dt) const {
  const double g = hp_.time_intervals_enabled ? decay_g(dt, hp_.decay) : 1.0;
  if (probe_.on_decay) probe_.on_decay(dt, g);
  return g;
}

Session::Traced& Session::traced(NodeId v) {
  auto it = traced_.find(v);
  if (it != traced_.end()) return it->second;
  store_.register_node(v);
  const NodeState& s = store_.state(v);
  Traced t{tape_.constant(s.c_src), tape_.constant(s.h_src), tape_.constant(s.c_dst), tape_.constant(s.h_dst),
           tape_.constant(s.u)};
  return traced_.emplace(v, t).first->second;
}

ValueId Session::features(NodeId v) { return traced(v).u; }

void Session::write_back(NodeId v) {
  const Traced& t = traced_.at(v);
  NodeState s = store_.state(v);
  s.c_src = tape_.value(t.c_src);
  s.h_src = tape_.value(t.h_src);
  s.c_dst = tape_.value(t.c_dst);
  s.h_dst = tape_.value(t.h_dst);
  s.u = tape_.value(t.u);
  store_.set_state(v, std::move(s));
}

ValueId Session::update_role(NodeId v, Role role, ValueId e, double dt) {
  Traced& t = traced(v);
  const UpdateUnitVars& unit = role == Role::source ? vars_.source_update : vars_.target_update;
  ValueId& c = role == Role::source ? t.c_src : t.c_dst;
  ValueId& h = role == Role::source ? t.h_src : t.h_dst;
  const ValueId c_star = time_adjust_cell(tape_, unit, c, decay(dt));
  auto [c_new, h_new] = lstm_step(tape_, unit, c_star, h, e);
  c = c_new;
  h = h_new;
  return h_new;
}

Session::PropagationPlan Session::plan_propagation(NodeId center, ValueId u_center, PropKind kind,
                                                   const GraphStore::NeighborMap& neighbors, double time,
                                                   NodeId skip_a, NodeId skip_b) {
  (void)center;
  PropagationPlan plan;
  plan.kind = kind;
  if (neighbors.empty()) return plan;

  std::vector<std::size_t> passing;
  std::size_t index = 0;
  for (const auto& [id, last] : neighbors) {
    if (id != skip_a && id != skip_b) {
      const double dt = time - last;
      if (filter_h(dt, hp_.tau) == 1) {
        passing.push_back(index);
        plan.targets.push_back(Neighbor{id, last});
        plan.decays.push_back(decay(dt));
      } else {
        ++stats_.filtered;
      }
    }
    ++index;
  }
  if (plan.targets.empty()) return plan;

  if (!hp_.attention_enabled) {
    plan.uniform = 1.0 / static_cast<double>(neighbors.size());
    if (probe_.on_attention) {
      std::vector<double> w(neighbors.size(), plan.uniform);
      probe_.on_attention(kind, w);
    }
    return plan;
  }

  // Normalized over every role neighbor, including ones filtered or skipped.
  std::vector<ValueId> scores;
  scores.reserve(neighbors.size());
  for (const auto& [id, last] : neighbors) {
    const ValueId u_x = id == center ? u_center : traced(id).u;
    scores.push_back(tape_.dot(u_x, u_center));
  }
  const ValueId weights = tape_.softmax(tape_.stack(scores));
  if (probe_.on_attention) probe_.on_attention(kind, tape_.value(weights).values());
  for (std::size_t i : passing) plan.weights.push_back(tape_.element(weights, i));
  return plan;
}

std::vector<PropagationUpdate> Session::apply_propagation(const PropagationPlan& plan, ValueId e) {
  std::vector<PropagationUpdate> out;
  if (plan.targets.empty()) return out;
  const ValueId message = tape_.matvec(vars_.prop_for(plan.kind), e);
  const Role role = neighbor_role(plan.kind);
  for (std::size_t i = 0; i < plan.targets.size(); ++i) {
    const NodeId x = plan.targets[i].id;
    ValueId increment = hp_.attention_enabled ? tape_.scale_by(message, plan.weights[i])
                                              : tape_.scale(message, plan.uniform);
    increment = tape_.scale(increment, plan.decays[i]);
    Traced& t = traced(x);
    ValueId& c = role == Role::source ? t.c_src : t.c_dst;
    ValueId& h = role == Role::source ? t.h_src : t.h_dst;
    c = tape_.add(c, increment);
    h = tape_.tanh(c);
    t.u = merge(tape_, vars_, t.h_src, t.h_dst);
    ++stats_.propagations;
    out.push_back(PropagationUpdate{x, role, tape_.value(c), tape_.value(h)});
  }
  return out;
}

std::vector<PropagationUpdate> Session::propagate(ValueId e, NodeId center, ValueId u_center, PropKind kind,
                                                  const GraphStore::NeighborMap& neighbors, double time,
                                                  NodeId skip_a, NodeId skip_b) {
  const PropagationPlan plan = plan_propagation(center, u_center, kind, neighbors, time, skip_a, skip_b);
  auto updates = apply_propagation(plan, e);
  for (const auto& up : updates) write_back(up.node);
  return updates;
}

void Session::process_event(const InteractionEvent& ev) {
  store_.check_order(ev);
  const NodeId src = ev.src;
  const NodeId dst = ev.dst;

  // (1) pre-event states
  const ValueId u_src = traced(src).u;
  const ValueId u_dst = traced(dst).u;
  const auto& src_last = store_.state(src).last_event_time;
  const auto& dst_last = store_.state(dst).last_event_time;
  const double dt_src = src_last ? ev.time - *src_last : 0.0;
  const double dt_dst = dst_last ? ev.time - *dst_last : 0.0;

  // Attention reads u(t-), so plan propagation before anything is updated.
  std::vector<PropagationPlan> plans;
  if (hp_.propagation_enabled) {
    const auto& src_sources = store_.source_neighbors(src);
    const auto& src_targets = store_.target_neighbors(src);
    const auto& dst_sources = store_.source_neighbors(dst);
    const auto& dst_targets = store_.target_neighbors(dst);
    plans.push_back(plan_propagation(src, u_src, PropKind::src_to_sources, src_sources, ev.time, src, dst));
    plans.push_back(plan_propagation(src, u_src, PropKind::src_to_targets, src_targets, ev.time, src, dst));
    plans.push_back(plan_propagation(dst, u_dst, PropKind::dst_to_sources, dst_sources, ev.time, src, dst));
    plans.push_back(plan_propagation(dst, u_dst, PropKind::dst_to_targets, dst_targets, ev.time, src, dst));
  }

  // (2) interaction message
  const ValueId e = interact(tape_, vars_, u_src, u_dst);

  // (3) S-Update on the source role of src, G-Update on the target role of dst
  update_role(src, Role::source, e, dt_src);
  update_role(dst, Role::target, e, dt_dst);

  // (4) merge
  Traced& ts = traced(src);
  ts.u = merge(tape_, vars_, ts.h_src, ts.h_dst);
  if (dst != src) {
    Traced& td = traced(dst);
    td.u = merge(tape_, vars_, td.h_src, td.h_dst);
  }

  // (5) propagation with the same e(t)
  std::set<NodeId> touched{src, dst};
  for (const auto& plan : plans) {
    for (const auto& up : apply_propagation(plan, e)) touched.insert(up.node);
  }

  // (6) commit
  for (NodeId v : touched) write_back(v);
  store_.add_event(ev);
  ++stats_.events;
}

void process_event(const InteractionEvent& ev, GraphStore& store, const ModelParams& params,
                   const HyperParams& hp) {
  Session session(store, params, hp, false);
  session.process_event(ev);
}

EngineStats process_stream(std::span<const InteractionEvent> events, GraphStore& store,
                           const ModelParams& params, const HyperParams& hp, const Probe& probe) {
  Session session(store, params, hp, false);
  session.set_probe(probe);
  std::size_t since_detach = 0;
  for (const auto& ev : events) {
    session.process_event(ev);
    if (++since_detach == kUntracedDetachInterval) {
      session.detach();
      since_detach = 0;
    }
  }
  return session.stats();
}

}  // namespace dgnn
