#include "dgnn/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <sstream>

namespace dgnn {

void TrainConfig::validate() const {
  if (batch_size < 1) throw nd::DomainError("train config: batch_size must be at least 1");
  if (!(lr >= 0.0)) throw nd::DomainError("train config: lr must be non-negative");
  if (!(labeled_fraction > 0.0 && labeled_fraction <= 1.0)) {
    throw nd::DomainError("train config: labeled_fraction must be in (0, 1]");
  }
}

Tensor project_lp(const Tensor& u, Role role, const ModelParams& p) {
  return nd::matvec(role == Role::source ? p.proj_src : p.proj_dst, u);
}

ValueId lp_loss(nd::Tape& tape, const ParamVars& p, ValueId u_src, ValueId u_dst,
                std::span<const ValueId> u_negatives, bool literal_negative_term) {
  const ValueId src = tape.matvec(p.proj_src, u_src);
  std::vector<ValueId> terms;
  terms.reserve(u_negatives.size() + 1);
  terms.push_back(tape.log_sigmoid(tape.dot(src, tape.matvec(p.proj_dst, u_dst))));
  for (ValueId u_n : u_negatives) {
    const ValueId score = tape.dot(src, tape.matvec(p.proj_dst, u_n));
    terms.push_back(tape.log_sigmoid(literal_negative_term ? score : tape.neg(score)));
  }
  return tape.neg(tape.sum(terms));
}

double lp_loss(const Tensor& u_src, const Tensor& u_dst, std::span<const Tensor> u_negatives,
               const ModelParams& p, bool literal_negative_term) {
  nd::Tape tape;
  ParamVars vars;
  vars.proj_src = tape.constant(p.proj_src);
  vars.proj_dst = tape.constant(p.proj_dst);
  std::vector<ValueId> negs;
  for (const Tensor& n : u_negatives) negs.push_back(tape.constant(n));
  return tape
      .value(lp_loss(tape, vars, tape.constant(u_src), tape.constant(u_dst), negs, literal_negative_term))
      .item();
}

std::vector<NodeId> sample_negatives(std::span<const NodeId> candidates, NodeId positive, std::size_t q,
                                     std::mt19937_64& rng) {
  if (q == 0) return {};
  std::vector<NodeId> pool;
  pool.reserve(candidates.size());
  for (NodeId c : candidates) {
    if (c != positive) pool.push_back(c);
  }
  if (pool.empty()) throw SamplingError("sample_negatives: no candidates besides the positive target");
  std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
  std::vector<NodeId> out(q);
  for (auto& n : out) n = pool[pick(rng)];
  return out;
}

std::vector<NodeId> batch_candidates(std::span<const InteractionEvent> batch, const GraphStore& store) {
  std::set<NodeId> involved;
  auto add_with_neighbors = [&](NodeId v) {
    involved.insert(v);
    if (!store.contains(v)) return;
    for (const auto& [id, t] : store.source_neighbors(v)) involved.insert(id);
    for (const auto& [id, t] : store.target_neighbors(v)) involved.insert(id);
  };
  for (const auto& ev : batch) {
    add_with_neighbors(ev.src);
    add_with_neighbors(ev.dst);
  }
  return {involved.begin(), involved.end()};
}

ValueId nc_loss(nd::Tape& tape, const ParamVars& p, ValueId u, std::size_t label) {
  const ValueId logits = tape.matvec(p.classifier, u);
  if (label >= tape.value(logits).size()) {
    throw nd::DimensionError("nc_loss: label " + std::to_string(label) + " outside " +
                             std::to_string(tape.value(logits).size()) + " classes");
  }
  return tape.neg(tape.element(tape.log_softmax(logits), label));
}

double nc_loss(const Tensor& u, std::size_t label, const ModelParams& p) {
  nd::Tape tape;
  ParamVars vars;
  vars.classifier = tape.constant(p.classifier);
  return tape.value(nc_loss(tape, vars, tape.constant(u), label)).item();
}

double nc_loss(const Tensor& u, const Tensor& y_one_hot, const ModelParams& p) {
  if (y_one_hot.size() != p.classifier.rows()) {
    throw nd::DimensionError("nc_loss: label vector " + nd::shape_string(y_one_hot.shape()) + " vs " +
                             std::to_string(p.classifier.rows()) + " classes");
  }
  nd::Tape tape;
  const ValueId logp = tape.log_softmax(tape.matvec(tape.constant(p.classifier), tape.constant(u)));
  double loss = 0.0;
  for (std::size_t i = 0; i < y_one_hot.size(); ++i) loss -= y_one_hot[i] * tape.value(logp)[i];
  return loss;
}

std::vector<double> class_scores(const Tensor& u, const ModelParams& p) {
  const Tensor logits = nd::matvec(p.classifier, u);
  return {logits.values().begin(), logits.values().end()};
}

std::vector<std::span<const InteractionEvent>> make_minibatches(std::span<const InteractionEvent> stream,
                                                                std::size_t batch_size) {
  if (batch_size < 1) throw nd::DomainError("make_minibatches: batch_size must be at least 1");
  std::vector<std::span<const InteractionEvent>> out;
  for (std::size_t start = 0; start < stream.size(); start += batch_size) {
    out.push_back(stream.subspan(start, std::min(batch_size, stream.size() - start)));
  }
  return out;
}

OptimizerState make_optimizer_state(const ModelParams& p) {
  return OptimizerState{zeros_like(p), zeros_like(p), 0};
}

void optimizer_step(ModelParams& p, const ModelParams& grads, OptimizerState& state, double lr,
                    OptimizerKind kind) {
  bool shapes_ok = true;
  visit_params([&](const std::string&, const Tensor& a, const Tensor& g) { shapes_ok = shapes_ok && a.shape() == g.shape(); },
               p, grads);
  if (!shapes_ok) throw nd::DimensionError("optimizer_step: gradient shapes do not match parameters");
  if (!all_finite(grads)) throw nd::NumericError("optimizer_step: non-finite gradient");

  if (kind == OptimizerKind::sgd) {
    visit_params(
        [&](const std::string&, Tensor& w, const Tensor& g) {
          for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
        },
        p, grads);
    ++state.step;
    return;
  }

  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(beta1, t);
  const double c2 = 1.0 - std::pow(beta2, t);
  visit_params(
      [&](const std::string&, Tensor& w, const Tensor& g, Tensor& m, Tensor& v) {
        for (std::size_t i = 0; i < w.size(); ++i) {
          m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
          v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
          const double m_hat = m[i] / c1;
          const double v_hat = v[i] / c2;
          w[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
      },
      p, grads, state.first_moment, state.second_moment);
}

TrainingState make_training_state(const HyperParams& hp, const TrainConfig& cfg, std::size_t num_classes) {
  hp.validate();
  cfg.validate();
  TrainingState s;
  s.params = init_params(hp.dim, num_classes, cfg.seed);
  s.optimizer = make_optimizer_state(s.params);
  s.rng.seed(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  return s;
}

BatchLoss build_batch_loss(Session& session, std::span<const InteractionEvent> batch, const TrainConfig& cfg,
                           std::mt19937_64& rng, const TrainLabels* labels) {
  nd::Tape& tape = session.tape();
  const std::vector<NodeId> candidates = batch_candidates(batch, session.store());
  std::vector<ValueId> terms;

  if (cfg.task == Task::link_prediction) {
    terms.reserve(batch.size());
    std::vector<ValueId> negs;
    for (const auto& ev : batch) {
      const ValueId u_src = session.features(ev.src);
      const ValueId u_dst = session.features(ev.dst);
      negs.clear();
      for (NodeId n : sample_negatives(candidates, ev.dst, cfg.negatives, rng)) negs.push_back(session.features(n));
      terms.push_back(lp_loss(tape, session.params(), u_src, u_dst, negs, cfg.literal_negative_term));
      session.process_event(ev);
    }
  } else {
    if (labels == nullptr) throw nd::DomainError("node classification requires training labels");
    for (const auto& ev : batch) session.process_event(ev);
    for (NodeId v : candidates) {
      auto it = labels->find(v);
      if (it == labels->end()) continue;
      terms.push_back(nc_loss(tape, session.params(), session.features(v), it->second));
    }
  }

  BatchLoss out;
  out.terms = terms.size();
  if (!terms.empty()) out.loss = tape.sum(terms);
  return out;
}

namespace {

double params_norm(const ModelParams& p) {
  double total = 0.0;
  visit_params([&](const std::string&, const Tensor& t) { total += nd::dot(t, t); }, p);
  return std::sqrt(total);
}

}  // namespace

EpochMetrics train_epoch(std::span<const InteractionEvent> stream, GraphStore& store, TrainingState& state,
                         const HyperParams& hp, const TrainConfig& cfg, const TrainLabels* labels) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  store.reset();
  Session session(store, state.params, hp, true);

  EpochMetrics metrics;
  double total = 0.0;
  const auto batches = make_minibatches(stream, cfg.batch_size);
  for (std::size_t b = 0; b < batches.size(); ++b) {
    const BatchLoss batch = build_batch_loss(session, batches[b], cfg, state.rng, labels);
    if (batch.loss) {
      const double value = session.tape().value(*batch.loss).item();
      if (!std::isfinite(value)) {
        std::ostringstream msg;
        msg << "non-finite loss in batch " << b << " (epoch " << state.epochs_done
            << ", parameter norm " << params_norm(state.params) << ")";
        throw nd::NumericError(msg.str());
      }
      const ModelParams grads = collect_gradients(session.tape().backward(*batch.loss), session.params());
      if (!all_finite(grads)) {
        std::ostringstream msg;
        msg << "non-finite gradient in batch " << b << " (epoch " << state.epochs_done
            << ", gradient norm " << params_norm(grads) << ")";
        throw nd::NumericError(msg.str());
      }
      optimizer_step(state.params, grads, state.optimizer, cfg.lr, cfg.optimizer);
      total += value;
      metrics.loss_terms += batch.terms;
    }
    session.detach();
    ++metrics.batches;
  }

  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  metrics.mean_loss = metrics.loss_terms > 0 ? total / static_cast<double>(metrics.loss_terms) : 0.0;
  metrics.events_per_sec = seconds > 0.0 ? static_cast<double>(stream.size()) / seconds : 0.0;
  ++state.epochs_done;
  return metrics;
}

}  // namespace dgnn
