#include "dgnn/eval.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dgnn/training.hpp"

namespace dgnn {

std::vector<TestPair> make_test_pairs(std::span<const InteractionEvent> events) {
  std::vector<TestPair> out;
  out.reserve(events.size() * 2);
  for (const auto& ev : events) {
    out.push_back(TestPair{ev.src, ev.dst, Direction::rank_targets, ev.time});
    out.push_back(TestPair{ev.dst, ev.src, Direction::rank_sources, ev.time});
  }
  return out;
}

FeatureMap features_of(const GraphStore& store) {
  FeatureMap out;
  for (NodeId v : store.nodes()) out.emplace(v, store.state(v).u);
  return out;
}

namespace {

Tensor unit(Tensor v) {
  const double n = nd::norm(v);
  if (n == 0.0) return Tensor(v.shape());
  for (double& x : v.values()) x /= n;
  return v;
}

}  // namespace

Ranker::Ranker(const FeatureMap& features, const ModelParams& params, FeatureMode mode, bool exclude_self)
    : exclude_self_(exclude_self) {
  ids_.reserve(features.size());
  for (const auto& [id, u] : features) ids_.push_back(id);
  std::sort(ids_.begin(), ids_.end());
  as_source_.reserve(ids_.size());
  as_target_.reserve(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    index_.emplace(ids_[i], i);
    const Tensor& u = features.at(ids_[i]);
    if (mode == FeatureMode::projected) {
      as_source_.push_back(unit(project_lp(u, Role::source, params)));
      as_target_.push_back(unit(project_lp(u, Role::target, params)));
    } else {
      as_source_.push_back(unit(u));
      as_target_.push_back(as_source_.back());
    }
  }
}

double Ranker::score(const TestPair& pair, NodeId candidate) const {
  const std::size_t q = index_.at(pair.query);
  const std::size_t c = index_.at(candidate);
  if (pair.direction == Direction::rank_targets) return nd::dot(as_source_[q], as_target_[c]);
  return nd::dot(as_target_[q], as_source_[c]);
}

RankResult Ranker::rank(const TestPair& pair) const {
  if (!knows(pair.query)) throw EvaluationError("rank: query node has no features");
  if (!knows(pair.truth)) throw EvaluationError("rank: truth node has no features");
  const bool targets = pair.direction == Direction::rank_targets;
  const Tensor& query = targets ? as_source_[index_.at(pair.query)] : as_target_[index_.at(pair.query)];
  const std::vector<Tensor>& pool = targets ? as_target_ : as_source_;

  const std::size_t truth_index = index_.at(pair.truth);
  const double truth_score = nd::dot(query, pool[truth_index]);
  std::size_t better = 0;
  std::size_t candidates = 0;
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    if (exclude_self_ && ids_[i] == pair.query && i != truth_index) continue;
    ++candidates;
    if (i == truth_index) continue;
    if (nd::dot(query, pool[i]) > truth_score) ++better;
  }
  return RankResult{pair, better + 1, candidates};
}

RankResult rank_candidates(const TestPair& pair, const FeatureMap& features, FeatureMode mode,
                           const ModelParams& params, bool exclude_self) {
  return Ranker(features, params, mode, exclude_self).rank(pair);
}

double mrr(std::span<const RankResult> results) {
  if (results.empty()) throw nd::DomainError("mrr: no results");
  double total = 0.0;
  for (const auto& r : results) total += 1.0 / static_cast<double>(r.rank);
  return total / static_cast<double>(results.size());
}

double recall_at_k(std::span<const RankResult> results, std::size_t k) {
  if (k < 1) throw nd::DomainError("recall_at_k: k must be at least 1");
  if (results.empty()) return 0.0;
  const auto hits = std::count_if(results.begin(), results.end(), [k](const RankResult& r) { return r.rank <= k; });
  return static_cast<double>(hits) / static_cast<double>(results.size());
}

F1Scores f1_scores(std::span<const std::size_t> predicted, std::span<const std::size_t> truth,
                   std::size_t num_classes) {
  if (predicted.size() != truth.size()) throw nd::DomainError("f1_scores: label lists differ in length");
  std::vector<std::size_t> tp(num_classes), fp(num_classes), fn(num_classes);
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const std::size_t p = predicted[i];
    const std::size_t t = truth[i];
    if (p >= num_classes || t >= num_classes) throw nd::DomainError("f1_scores: label outside [0, N_c)");
    if (p == t) {
      ++tp[p];
    } else {
      ++fp[p];
      ++fn[t];
    }
  }
  auto f1 = [](std::size_t tp_, std::size_t fp_, std::size_t fn_) {
    const double denom = 2.0 * static_cast<double>(tp_) + static_cast<double>(fp_ + fn_);
    return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp_) / denom;
  };
  std::size_t all_tp = 0, all_fp = 0, all_fn = 0;
  double macro = 0.0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    all_tp += tp[c];
    all_fp += fp[c];
    all_fn += fn[c];
    macro += f1(tp[c], fp[c], fn[c]);
  }
  F1Scores out;
  out.micro = f1(all_tp, all_fp, all_fn);
  out.macro = num_classes == 0 ? 0.0 : macro / static_cast<double>(num_classes);
  return out;
}

TemporalSplit temporal_split(std::span<const InteractionEvent> stream) {
  const std::size_t n = stream.size();
  const std::size_t train = n * 8 / 10;
  const std::size_t valid = n / 10;
  TemporalSplit s;
  s.train = stream.subspan(0, train);
  s.valid = stream.subspan(train, valid);
  s.test = stream.subspan(train + valid);
  s.degenerate = n < 10;
  return s;
}

NodeSplit node_split(std::span<const NodeId> labeled_nodes, double labeled_fraction, std::uint64_t seed) {
  const std::size_t n = labeled_nodes.size();
  if (n < 5) throw nd::DomainError("node_split: fewer than 5 labeled nodes");
  if (!(labeled_fraction > 0.0 && labeled_fraction <= 1.0)) {
    throw nd::DomainError("node_split: labeled fraction must be in (0, 1]");
  }
  std::vector<NodeId> order(labeled_nodes.begin(), labeled_nodes.end());
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const std::size_t hidden = n * 2 / 10;
  const std::size_t valid = hidden / 2;
  const std::size_t visible = n - hidden;
  const auto labeled = static_cast<std::size_t>(std::floor(static_cast<double>(visible) * labeled_fraction + 1e-9));

  NodeSplit s;
  auto take = [&](std::size_t from, std::size_t count) {
    std::vector<NodeId> part(order.begin() + static_cast<std::ptrdiff_t>(from),
                             order.begin() + static_cast<std::ptrdiff_t>(from + count));
    std::sort(part.begin(), part.end());
    return part;
  };
  s.valid = take(0, valid);
  s.test = take(valid, hidden - valid);
  s.train_labeled = take(hidden, labeled);
  s.train_unlabeled = take(hidden + labeled, visible - labeled);
  return s;
}

LinkPredictionReport evaluate_link_prediction(std::span<const InteractionEvent> test_events,
                                              const FeatureMap& features, const ModelParams& params,
                                              FeatureMode mode, bool exclude_self) {
  const Ranker ranker(features, params, mode, exclude_self);
  LinkPredictionReport report;
  for (const TestPair& pair : make_test_pairs(test_events)) {
    if (!ranker.knows(pair.query) || !ranker.knows(pair.truth)) {
      ++report.unseen_pairs;
      continue;
    }
    report.ranks.push_back(ranker.rank(pair));
  }
  report.pairs = report.ranks.size();
  if (!report.ranks.empty()) {
    report.mrr = mrr(report.ranks);
    report.recall_20 = recall_at_k(report.ranks, 20);
    report.recall_50 = recall_at_k(report.ranks, 50);
  }
  return report;
}

std::size_t predict_class(const Tensor& u, const ModelParams& params) {
  const auto scores = class_scores(u, params);
  if (scores.empty()) throw nd::DomainError("predict_class: classifier has no classes");
  return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

F1Scores evaluate_node_classification(std::span<const NodeId> nodes, const FeatureMap& features,
                                      const std::unordered_map<NodeId, std::size_t>& labels,
                                      const ModelParams& params) {
  std::vector<std::size_t> predicted;
  std::vector<std::size_t> truth;
  for (NodeId v : nodes) {
    auto f = features.find(v);
    auto l = labels.find(v);
    if (f == features.end() || l == labels.end()) continue;
    predicted.push_back(predict_class(f->second, params));
    truth.push_back(l->second);
  }
  return f1_scores(predicted, truth, params.classifier.rows());
}

}  // namespace dgnn
