#include "dgnn/model.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace dgnn {

void HyperParams::validate() const {
  if (dim < 1) throw nd::DomainError("hyperparams: dim must be at least 1");
  if (!(tau >= 0.0)) throw nd::DomainError("hyperparams: tau must be non-negative");
}

std::size_t param_tensor_count(const ModelParams& p) {
  std::size_t n = 0;
  visit_params([&](const std::string&, const Tensor&) { ++n; }, p);
  return n;
}

std::size_t param_scalar_count(const ModelParams& p) {
  std::size_t n = 0;
  visit_params([&](const std::string&, const Tensor& t) { n += t.size(); }, p);
  return n;
}

ModelParams init_params(std::size_t dim, std::size_t num_classes, std::uint64_t seed) {
  if (dim < 1) throw nd::DomainError("init_params: dim must be at least 1");
  std::mt19937_64 rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(dim));
  std::uniform_real_distribution<double> dist(-bound, bound);
  auto matrix = [&](std::size_t rows) {
    Tensor t({rows, dim});
    for (double& v : t.values()) v = dist(rng);
    return t;
  };
  auto bias = [&]() { return Tensor({dim}); };
  auto unit = [&]() {
    UpdateUnitParams u;
    u.decomp_w = matrix(dim);
    u.decomp_b = bias();
    for (auto* g : {&u.forget, &u.input, &u.output, &u.candidate}) {
      g->w = matrix(dim);
      g->u = matrix(dim);
      g->b = bias();
    }
    return u;
  };

  ModelParams p;
  p.interact_w_src = matrix(dim);
  p.interact_w_dst = matrix(dim);
  p.interact_b = bias();
  p.source_update = unit();
  p.target_update = unit();
  p.merge_w_src = matrix(dim);
  p.merge_w_dst = matrix(dim);
  p.merge_b = bias();
  for (auto& w : p.prop) w = matrix(dim);
  p.proj_src = matrix(dim);
  p.proj_dst = matrix(dim);
  p.classifier = matrix(num_classes);
  return p;
}

ModelParams zeros_like(const ModelParams& p) {
  ModelParams out = p;
  visit_params([](const std::string&, Tensor& t) { t = Tensor(t.shape()); }, out);
  return out;
}

bool all_finite(const ModelParams& p) {
  bool ok = true;
  visit_params([&](const std::string&, const Tensor& t) { ok = ok && t.all_finite(); }, p);
  return ok;
}

bool operator==(const ModelParams& a, const ModelParams& b) {
  bool same = true;
  visit_params([&](const std::string&, const Tensor& x, const Tensor& y) { same = same && x == y; }, a, b);
  return same;
}

ParamVars bind_params(nd::Tape& tape, const ModelParams& p, bool trainable) {
  ParamVars vars;
  visit_params(
      [&](const std::string&, const Tensor& t, ValueId& id) { id = trainable ? tape.leaf(t) : tape.constant(t); },
      p, vars);
  return vars;
}

ModelParams collect_gradients(const nd::Gradients& grads, const ParamVars& vars) {
  ModelParams out;
  visit_params([&](const std::string&, Tensor& g, const ValueId& id) { g = grads[id]; }, out, vars);
  return out;
}

double decay_g(double dt, DecayKind kind) {
  if (dt < 0.0) throw nd::DomainError("decay_g: negative time interval");
  switch (kind) {
    case DecayKind::reciprocal_log:
      return 1.0 / std::log(std::numbers::e + dt);
  }
  throw nd::DomainError("decay_g: unknown decay kind");
}

int filter_h(double dt, double tau) { return dt <= tau ? 1 : 0; }

ValueId interact(nd::Tape& tape, const ParamVars& p, ValueId u_src, ValueId u_dst) {
  const ValueId a = tape.matvec(p.interact_w_src, u_src);
  const ValueId b = tape.matvec(p.interact_w_dst, u_dst);
  return tape.tanh(tape.add(tape.add(a, b), p.interact_b));
}

ValueId time_adjust_cell(nd::Tape& tape, const UpdateUnitVars& unit, ValueId c, double decay) {
  const ValueId short_term = tape.tanh(tape.add(tape.matvec(unit.decomp_w, c), unit.decomp_b));
  const ValueId long_term = tape.sub(c, short_term);
  return tape.add(long_term, tape.scale(short_term, decay));
}

namespace {

ValueId gate_preactivation(nd::Tape& tape, const BasicGate<ValueId>& g, ValueId e, ValueId h_prev) {
  return tape.add(tape.add(tape.matvec(g.w, e), tape.matvec(g.u, h_prev)), g.b);
}

}  // namespace

std::pair<ValueId, ValueId> lstm_step(nd::Tape& tape, const UpdateUnitVars& unit, ValueId c_star,
                                      ValueId h_prev, ValueId e) {
  const ValueId f = tape.sigmoid(gate_preactivation(tape, unit.forget, e, h_prev));
  const ValueId i = tape.sigmoid(gate_preactivation(tape, unit.input, e, h_prev));
  const ValueId o = tape.sigmoid(gate_preactivation(tape, unit.output, e, h_prev));
  const ValueId candidate = tape.tanh(gate_preactivation(tape, unit.candidate, e, h_prev));
  const ValueId c_new = tape.add(tape.hadamard(f, c_star), tape.hadamard(i, candidate));
  const ValueId h_new = tape.hadamard(o, tape.tanh(c_new));
  return {c_new, h_new};
}

ValueId merge(nd::Tape& tape, const ParamVars& p, ValueId h_src, ValueId h_dst) {
  return tape.add(tape.add(tape.matvec(p.merge_w_src, h_src), tape.matvec(p.merge_w_dst, h_dst)), p.merge_b);
}

namespace {

UpdateUnitVars bind_unit(nd::Tape& tape, const UpdateUnitParams& unit) {
  UpdateUnitVars v;
  v.decomp_w = tape.constant(unit.decomp_w);
  v.decomp_b = tape.constant(unit.decomp_b);
  auto gate = [&](const BasicGate<Tensor>& g) {
    return BasicGate<ValueId>{tape.constant(g.w), tape.constant(g.u), tape.constant(g.b)};
  };
  v.forget = gate(unit.forget);
  v.input = gate(unit.input);
  v.output = gate(unit.output);
  v.candidate = gate(unit.candidate);
  return v;
}

}  // namespace

Tensor interact(const Tensor& u_src, const Tensor& u_dst, const ModelParams& p) {
  nd::Tape tape;
  ParamVars vars;
  vars.interact_w_src = tape.constant(p.interact_w_src);
  vars.interact_w_dst = tape.constant(p.interact_w_dst);
  vars.interact_b = tape.constant(p.interact_b);
  return tape.value(interact(tape, vars, tape.constant(u_src), tape.constant(u_dst)));
}

Tensor time_adjust_cell(const Tensor& c, double dt, const UpdateUnitParams& unit, const HyperParams& hp) {
  nd::Tape tape;
  const UpdateUnitVars vars = bind_unit(tape, unit);
  const double decay = hp.time_intervals_enabled ? decay_g(dt, hp.decay) : 1.0;
  return tape.value(time_adjust_cell(tape, vars, tape.constant(c), decay));
}

std::pair<Tensor, Tensor> lstm_step(const Tensor& c_star, const Tensor& h_prev, const Tensor& e,
                                    const UpdateUnitParams& unit) {
  nd::Tape tape;
  const UpdateUnitVars vars = bind_unit(tape, unit);
  auto [c, h] = lstm_step(tape, vars, tape.constant(c_star), tape.constant(h_prev), tape.constant(e));
  return {tape.value(c), tape.value(h)};
}

Tensor merge(const Tensor& h_src, const Tensor& h_dst, const ModelParams& p) {
  nd::Tape tape;
  ParamVars vars;
  vars.merge_w_src = tape.constant(p.merge_w_src);
  vars.merge_w_dst = tape.constant(p.merge_w_dst);
  vars.merge_b = tape.constant(p.merge_b);
  return tape.value(merge(tape, vars, tape.constant(h_src), tape.constant(h_dst)));
}

Tensor attention_weights(std::span<const Tensor> u_neighbors, const Tensor& u_center, bool attention_enabled) {
  if (u_neighbors.empty()) throw nd::DomainError("attention_weights: no neighbors");
  const std::size_t n = u_neighbors.size();
  if (!attention_enabled) return Tensor::vector(std::vector<double>(n, 1.0 / static_cast<double>(n)));
  Tensor scores({n});
  for (std::size_t i = 0; i < n; ++i) scores[i] = nd::dot(u_neighbors[i], u_center);
  return nd::softmax(scores);
}

}  // namespace dgnn
