#include <gtest/gtest.h>

#include <cmath>

#include "dgnn/engine.hpp"
#include "generators.hpp"
#include "reference_engine.hpp"

using namespace dgnn;
using dgnn::testing::Gen;
using dgnn::testing::zero_params;

namespace {

const double kHalfDecayGap = std::exp(2.0) - std::exp(1.0);  // decay_g of this gap is 0.5

NodeState state_with(std::size_t d, double c_src, double c_dst) {
  NodeState s;
  s.c_src = Tensor::vector(std::vector<double>(d, c_src));
  s.h_src = Tensor::vector(std::vector<double>(d, std::tanh(c_src)));
  s.c_dst = Tensor::vector(std::vector<double>(d, c_dst));
  s.h_dst = Tensor::vector(std::vector<double>(d, std::tanh(c_dst)));
  s.u = Tensor::vector(std::vector<double>(d, 0.0));
  return s;
}

}  // namespace

TEST(Propagate, HandExample) {
  ModelParams p = zero_params(1);
  p.prop[1] = Tensor::matrix(1, 1, {2.0});
  GraphStore store(1, 0);
  store.register_node(0);
  store.register_node(1);
  store.set_state(1, state_with(1, 0.0, 0.1));
  Session session(store, p, HyperParams{.dim = 1, .tau = 100}, false);
  const ValueId e = session.tape().constant(Tensor::vector({1.0}));
  const GraphStore::NeighborMap nbrs{{1, 0.0}};
  const auto updates =
      session.propagate(e, 0, session.features(0), PropKind::src_to_targets, nbrs, kHalfDecayGap, 98, 99);
  ASSERT_EQ(updates.size(), 1u);
  EXPECT_EQ(updates[0].role, Role::target);
  EXPECT_NEAR(store.state(1).c_dst[0], 1.1, 1e-15);
  EXPECT_NEAR(store.state(1).h_dst[0], std::tanh(1.1), 1e-15);
  EXPECT_EQ(store.state(1).c_src[0], 0.0);
}

TEST(Propagate, ZeroThresholdFiltersEverything) {
  Gen gen(1);
  const ModelParams p = gen.params(3, 0, 0.5);
  GraphStore store(3, 2);
  for (NodeId v = 0; v < 4; ++v) store.register_node(v);
  const GraphStore before = store;
  Session session(store, p, HyperParams{.dim = 3, .tau = 0}, false);
  const ValueId e = session.tape().constant(gen.vector(3));
  const GraphStore::NeighborMap nbrs{{1, 0.5}, {2, 0.9}, {3, 0.1}};
  EXPECT_TRUE(session.propagate(e, 0, session.features(0), PropKind::dst_to_sources, nbrs, 1.0, 98, 99).empty());
  EXPECT_EQ(store, before);
  EXPECT_EQ(session.stats().filtered, 3u);
}

TEST(Propagate, ZeroMessageKeepsCellAndRefreshesHidden) {
  Gen gen(2);
  const ModelParams p = gen.params(2, 0, 0.5);
  GraphStore store(2, 2);
  store.register_node(0);
  store.register_node(1);
  NodeState s = store.state(1);
  s.h_src = Tensor::vector({0.9, -0.9});  // deliberately stale
  store.set_state(1, s);
  Session session(store, p, HyperParams{.dim = 2}, false);
  const ValueId e = session.tape().constant(Tensor::vector({0, 0}));
  session.propagate(e, 0, session.features(0), PropKind::src_to_sources, {{1, 0.0}}, 1.0, 98, 99);
  const NodeState& after = store.state(1);
  EXPECT_EQ(after.c_src, s.c_src);
  EXPECT_EQ(after.h_src, Tensor::vector({std::tanh(s.c_src[0]), std::tanh(s.c_src[1])}));
  EXPECT_EQ(after.u, merge(after.h_src, after.h_dst, p));
}

TEST(Propagate, SkipsInteractingNodesButCountsThemInAttention) {
  ModelParams p = zero_params(1);
  p.prop[0] = Tensor::matrix(1, 1, {1.0});
  GraphStore store(1, 0);
  for (NodeId v = 0; v < 3; ++v) {
    store.register_node(v);
    store.set_state(v, state_with(1, 0.0, 0.0));
  }
  Session session(store, p, HyperParams{.dim = 1}, false);
  const ValueId e = session.tape().constant(Tensor::vector({1.0}));
  const auto updates =
      session.propagate(e, 0, session.features(0), PropKind::src_to_sources, {{1, 0.0}, {2, 0.0}}, 0.0, 2, 99);
  ASSERT_EQ(updates.size(), 1u);
  EXPECT_EQ(updates[0].node, 1u);
  EXPECT_NEAR(store.state(1).c_src[0], 0.5, 1e-15);
}

TEST(ProcessEvent, IsolatedEventTouchesOnlyEndpointRoles) {
  Gen gen(3);
  const ModelParams p = gen.params(4, 0, 0.5);
  GraphStore store(4, 1);
  for (NodeId v = 0; v < 5; ++v) store.register_node(v);
  const GraphStore before = store;
  process_event({1, 3, 0.0}, store, p, HyperParams{.dim = 4});
  for (NodeId v : {0u, 2u, 4u}) EXPECT_EQ(store.state(v), before.state(v));
  EXPECT_NE(store.state(1).c_src, before.state(1).c_src);
  EXPECT_EQ(store.state(1).c_dst, before.state(1).c_dst);
  EXPECT_EQ(store.state(3).c_src, before.state(3).c_src);
  EXPECT_NE(store.state(3).c_dst, before.state(3).c_dst);
}

TEST(ProcessEvent, TwoHubEventMutatedSet) {
  Gen gen(4);
  const ModelParams p = gen.params(3, 0, 0.5);
  const HyperParams hp{.dim = 3, .tau = 6.5};
  GraphStore store(3, 1);
  for (NodeId v = 0; v < 9; ++v) store.register_node(v);
  process_stream(std::vector<InteractionEvent>{{1, 2, 0.0}, {3, 5, 1.0}, {7, 2, 3.0}, {5, 6, 4.0}}, store, p, hp);
  const GraphStore before = store;
  process_event({2, 5, 7.0}, store, p, hp);
  // v1 met v2 seven days back: filtered out.
  for (NodeId v : {0u, 1u, 4u, 8u}) EXPECT_EQ(store.state(v), before.state(v)) << v;
  EXPECT_NE(store.state(3).c_src, before.state(3).c_src);
  EXPECT_EQ(store.state(3).c_dst, before.state(3).c_dst);
  EXPECT_NE(store.state(6).c_dst, before.state(6).c_dst);
  EXPECT_NE(store.state(7).c_src, before.state(7).c_src);
  EXPECT_EQ(store.state(2).c_dst, before.state(2).c_dst);
  EXPECT_EQ(store.state(5).c_src, before.state(5).c_src);
}

TEST(ProcessEvent, MatchesReferenceEngine) {
  Gen gen(5);
  for (int trial = 0; trial < 12; ++trial) {
    const std::size_t d = gen.between(1, 5);
    HyperParams hp{.dim = d, .tau = gen.uniform(0.0, 4.0)};
    hp.time_intervals_enabled = gen.coin();
    hp.attention_enabled = gen.coin();
    hp.propagation_enabled = gen.coin(0.8);
    const ModelParams p = gen.params(d, 0, 0.6);
    const auto events = gen.stream(gen.between(3, 12), 60, 0.0, 1.0);
    GraphStore engine(d, trial), reference(d, trial);
    process_stream(events, engine, p, hp);
    for (const auto& ev : events) dgnn::testing::reference_process_event(ev, reference, p, hp);
    ASSERT_LE(dgnn::testing::store_distance(engine, reference), 1e-12) << "trial " << trial;
  }
}

TEST(ProcessEvent, DeterministicAcrossRuns) {
  Gen gen(6);
  const ModelParams p = gen.params(6, 0, 0.4);
  const auto events = gen.stream(20, 300);
  GraphStore a(6, 9), b(6, 9);
  process_stream(events, a, p, HyperParams{.dim = 6, .tau = 2.0});
  process_stream(events, b, p, HyperParams{.dim = 6, .tau = 2.0});
  EXPECT_EQ(a, b);
}

TEST(ProcessEvent, OutOfOrderEventLeavesStoreUntouched) {
  GraphStore store(2, 1);
  const ModelParams p = init_params(2, 0, 1);
  process_event({0, 1, 5.0}, store, p, HyperParams{.dim = 2});
  const GraphStore before = store;
  EXPECT_THROW(process_event({1, 0, 4.0}, store, p, HyperParams{.dim = 2}), OrderingError);
  EXPECT_EQ(store, before);
}

TEST(LocalityProperty, OnlyInfluencedStatesChange) {
  Gen gen(7);
  for (int trial = 0; trial < 3; ++trial) {
    const ModelParams p = gen.params(4, 0, 0.5);
    const auto events = gen.stream(50, 300, 0.0, 0.5);
    GraphStore store(4, trial);
    EXPECT_EQ(dgnn::testing::locality_violations(events, store, p, HyperParams{.dim = 4, .tau = 3.0}), 0u);
  }
}

TEST(AdditivityProperty, CellDeltaIsWeightedMessage) {
  Gen gen(8);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = gen.between(1, 4);
    const ModelParams p = gen.params(d, 0, 0.8);
    const double tau = gen.uniform(0.5, 3.0);
    GraphStore store(d, trial);
    const std::size_t n = gen.between(1, 6);
    GraphStore::NeighborMap nbrs;
    for (NodeId v = 0; v <= n; ++v) store.register_node(v);
    for (NodeId v = 1; v <= n; ++v) nbrs[v] = gen.uniform(0.0, 4.0);
    const GraphStore before = store;
    const double now = 4.0;
    const Tensor e_value = gen.vector(d);
    const auto kind = static_cast<PropKind>(gen.index(4));
    const bool source_role = kind == PropKind::src_to_sources || kind == PropKind::dst_to_sources;

    Session session(store, p, HyperParams{.dim = d, .tau = tau}, false);
    session.propagate(session.tape().constant(e_value), 0, session.features(0), kind, nbrs, now, 98, 99);

    std::vector<Tensor> u_all;
    for (const auto& [v, t] : nbrs) u_all.push_back(before.state(v).u);
    const Tensor w = attention_weights(u_all, before.state(0).u, true);
    const Tensor message = nd::matvec(p.prop_for(kind), e_value);
    std::size_t i = 0;
    for (const auto& [v, t] : nbrs) {
      const Tensor& c_before = source_role ? before.state(v).c_src : before.state(v).c_dst;
      const Tensor& c_after = source_role ? store.state(v).c_src : store.state(v).c_dst;
      const bool passes = now - t <= tau;
      for (std::size_t k = 0; k < d; ++k) {
        const double expected = passes ? message[k] * w[i] * decay_g(now - t) : 0.0;
        ASSERT_NEAR(c_after[k] - c_before[k], expected, 1e-14);
      }
      ++i;
    }
  }
}

TEST(Variants, NoPropagationEqualsStubbedReference) {
  Gen gen(9);
  const ModelParams p = gen.params(3, 0, 0.5);
  const auto events = gen.stream(10, 200);
  GraphStore engine(3, 4), full(3, 4), stubbed(3, 4);
  HyperParams hp{.dim = 3, .tau = 50};
  for (const auto& ev : events) dgnn::testing::reference_process_event(ev, stubbed, p, hp, {.stub_propagation = true});
  for (const auto& ev : events) dgnn::testing::reference_process_event(ev, full, p, hp);
  hp.propagation_enabled = false;
  const EngineStats stats = process_stream(events, engine, p, hp);
  EXPECT_EQ(stats.propagations, 0u);
  EXPECT_LE(dgnn::testing::store_distance(engine, stubbed), 1e-12);
  EXPECT_GT(dgnn::testing::store_distance(engine, full), 1e-6);
}

TEST(Variants, ZeroThresholdEqualsNoPropagation) {
  Gen gen(10);
  const ModelParams p = gen.params(3, 0, 0.5);
  const auto events = gen.stream(10, 200, 0.01, 1.0);
  GraphStore a(3, 4), b(3, 4);
  process_stream(events, a, p, HyperParams{.dim = 3, .tau = 0});
  process_stream(events, b, p, HyperParams{.dim = 3, .tau = 50, .propagation_enabled = false});
  EXPECT_EQ(a, b);
}

TEST(Variants, NoTimeIntervalsReportsUnitDecay) {
  Gen gen(11);
  const ModelParams p = gen.params(3, 0, 0.5);
  const auto events = gen.stream(6, 100, 0.1, 2.0);
  std::size_t calls = 0, unit = 0;
  Probe probe;
  probe.on_decay = [&](double, double g) {
    ++calls;
    if (g == 1.0) ++unit;
  };
  GraphStore store(3, 1);
  process_stream(events, store, p, HyperParams{.dim = 3, .time_intervals_enabled = false}, probe);
  EXPECT_GT(calls, 100u);
  EXPECT_EQ(unit, calls);
}

TEST(Variants, NoAttentionGivesUniformWeightsOnThreeNeighbors) {
  Gen gen(12);
  const ModelParams p = gen.params(3, 0, 1.0);
  // 1, 2, 3 all point at 0; then 0 acts as a target again.
  const std::vector<InteractionEvent> events{{1, 0, 0.0}, {2, 0, 0.1}, {3, 0, 0.2}, {4, 0, 0.3}};
  for (bool attention : {false, true}) {
    std::vector<std::vector<double>> seen;
    Probe probe;
    probe.on_attention = [&](PropKind kind, std::span<const double> w) {
      if (kind == PropKind::dst_to_sources && w.size() == 3) seen.emplace_back(w.begin(), w.end());
    };
    GraphStore store(3, 1);
    process_stream(events, store, p, HyperParams{.dim = 3, .attention_enabled = attention}, probe);
    ASSERT_EQ(seen.size(), 1u);
    const double spread = std::abs(seen[0][0] - seen[0][1]) + std::abs(seen[0][1] - seen[0][2]);
    if (attention) {
      EXPECT_GT(spread, 1e-6);
    } else {
      for (double w : seen[0]) EXPECT_NEAR(w, 1.0 / 3.0, 1e-12);
    }
  }
}

TEST(Gradients, FiveEventStreamMatchesFiniteDifferences) {
  Gen gen(13);
  const std::vector<InteractionEvent> events{{0, 1, 0.0}, {1, 2, 0.5}, {2, 0, 1.0}, {3, 1, 1.5}, {0, 3, 2.0}};
  const HyperParams hp{.dim = 4, .tau = 1e6};
  TrainConfig cfg;
  cfg.negatives = 2;
  const auto check = dgnn::testing::link_loss_gradient_check(events, hp, cfg, gen.params(4, 0, 0.5), 3, 17);
  EXPECT_LE(check.max_error, 1e-4) << check.worst;
  EXPECT_EQ(check.entries, 28u * 16u + 12u * 4u);
}
