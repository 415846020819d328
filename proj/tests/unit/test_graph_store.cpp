#include <gtest/gtest.h>

#include <set>

#include "dgnn/graph_store.hpp"
#include "generators.hpp"

using namespace dgnn;
using dgnn::testing::Gen;

namespace {

std::set<NodeId> ids_of(const std::vector<Neighbor>& list) {
  std::set<NodeId> out;
  for (const auto& n : list) out.insert(n.id);
  return out;
}

GraphStore::NeighborMap map_of(std::initializer_list<std::pair<const NodeId, double>> entries) {
  return GraphStore::NeighborMap(entries);
}

}  // namespace

TEST(AddEvent, SingleEdge) {
  GraphStore store(4, 1);
  store.add_event({2, 1, 0.0});
  EXPECT_EQ(store.node_count(), 2u);
  EXPECT_EQ(store.target_neighbors(2), map_of({{1, 0.0}}));
  EXPECT_EQ(store.source_neighbors(1), map_of({{2, 0.0}}));
  EXPECT_TRUE(store.source_neighbors(2).empty());
  EXPECT_TRUE(store.target_neighbors(1).empty());
}

TEST(AddEvent, RepeatedEdgeRefreshesTime) {
  GraphStore store(4, 1);
  store.add_event({2, 1, 0.0});
  store.add_event({2, 1, 5.0});
  EXPECT_EQ(store.target_neighbors(2), map_of({{1, 5.0}}));
  EXPECT_EQ(store.source_neighbors(1), map_of({{2, 5.0}}));
}

TEST(AddEvent, TwoInteractionsOfOneNode) {
  GraphStore store(4, 1);
  store.add_event({2, 1, 0.0});
  store.add_event({7, 2, 3.0});
  EXPECT_EQ(store.source_neighbors(2), map_of({{7, 3.0}}));
  EXPECT_EQ(store.target_neighbors(2), map_of({{1, 0.0}}));
}

TEST(AddEvent, SelfLoopIsStored) {
  GraphStore store(2, 1);
  store.add_event({3, 3, 1.0});
  EXPECT_EQ(store.node_count(), 1u);
  EXPECT_EQ(store.target_neighbors(3), map_of({{3, 1.0}}));
  EXPECT_EQ(store.source_neighbors(3), map_of({{3, 1.0}}));
}

TEST(AddEvent, OutOfOrderCarriesBothTimes) {
  GraphStore store(2, 1);
  store.add_event({0, 1, 10.0});
  try {
    store.add_event({1, 0, 9.5});
    FAIL() << "expected OrderingError";
  } catch (const OrderingError& e) {
    EXPECT_EQ(e.last_time(), 10.0);
    EXPECT_EQ(e.event_time(), 9.5);
  }
  EXPECT_NO_THROW(store.add_event({1, 0, 10.0}));  // equal times are allowed
}

TEST(AddEvent, SetsLastEventTimeOfBothEndpoints) {
  GraphStore store(2, 1);
  store.register_node(5);
  EXPECT_FALSE(store.state(5).last_event_time.has_value());
  store.add_event({5, 6, 2.5});
  EXPECT_EQ(store.state(5).last_event_time, 2.5);
  EXPECT_EQ(store.state(6).last_event_time, 2.5);
  EXPECT_EQ(store.current_time(), 2.5);
}

TEST(InfluencedNodes, FirstEventHasNone) {
  GraphStore store(2, 1);
  EXPECT_TRUE(store.influenced_nodes({0, 1, 0.0}).empty());
}

TEST(InfluencedNodes, TwoHubScenario) {
  // v1 -> v2, v7 -> v2 put {v1, v7} around v2; v3 -> v5, v5 -> v6 put {v3, v6}
  // around v5. Then v2 -> v5 at t7.
  GraphStore store(2, 1);
  store.add_event({2, 1, 0.0});
  store.add_event({3, 5, 1.0});
  store.add_event({7, 2, 3.0});
  store.add_event({5, 6, 4.0});
  const InfluencedNodes inf = store.influenced_nodes({2, 5, 7.0});
  std::set<NodeId> all;
  for (const auto* list : {&inf.src_sources, &inf.src_targets, &inf.dst_sources, &inf.dst_targets}) {
    const auto ids = ids_of(*list);
    all.insert(ids.begin(), ids.end());
  }
  EXPECT_EQ(all, (std::set<NodeId>{1, 3, 6, 7}));
  EXPECT_EQ(ids_of(inf.src_sources), (std::set<NodeId>{7}));
  EXPECT_EQ(ids_of(inf.src_targets), (std::set<NodeId>{1}));
  EXPECT_EQ(ids_of(inf.dst_sources), (std::set<NodeId>{3}));
  EXPECT_EQ(ids_of(inf.dst_targets), (std::set<NodeId>{6}));
  EXPECT_EQ(inf.src_sources.front().time, 3.0);
}

TEST(InfluencedNodes, MutualOnlyNeighborsAreExcluded) {
  GraphStore store(2, 1);
  store.add_event({0, 1, 0.0});
  store.add_event({1, 0, 1.0});
  EXPECT_TRUE(store.influenced_nodes({0, 1, 2.0}).empty());
  // Exclusion is per event: the history is kept.
  EXPECT_EQ(store.target_neighbors(0).count(1), 1u);
}

TEST(InfluencedNodes, ComputedBeforeTheEvent) {
  GraphStore store(2, 1);
  store.add_event({0, 1, 0.0});
  const InfluencedNodes inf = store.influenced_nodes({2, 0, 1.0});
  EXPECT_EQ(ids_of(inf.dst_targets), (std::set<NodeId>{1}));
  EXPECT_TRUE(inf.src_sources.empty());
}

TEST(State, SetThenGetRoundTrips) {
  Gen gen(3);
  GraphStore store(3, 1);
  store.register_node(0);
  NodeState s{gen.vector(3), gen.vector(3), gen.vector(3), gen.vector(3), gen.vector(3), 4.0};
  store.set_state(0, s);
  EXPECT_EQ(store.state(0), s);
}

TEST(State, FreshNodeHasDimensionDAndBoundedValues) {
  GraphStore store(5, 9);
  store.add_event({0, 1, 0.0});
  const NodeState& s = store.state(0);
  for (const Tensor* t : {&s.c_src, &s.h_src, &s.c_dst, &s.h_dst, &s.u}) {
    ASSERT_EQ(t->shape(), (nd::Shape{5}));
    for (double x : t->values()) {
      EXPECT_GE(x, -0.1);
      EXPECT_LE(x, 0.1);
    }
  }
}

TEST(State, InitialStateDependsOnSeedAndNodeOnly) {
  GraphStore a(4, 11), b(4, 11), c(4, 12);
  a.register_node(3);
  b.register_node(7);
  b.register_node(3);
  c.register_node(3);
  EXPECT_EQ(a.state(3), b.state(3));
  EXPECT_NE(a.state(3), c.state(3));
  EXPECT_NE(b.state(3), b.state(7));
}

TEST(State, ErrorsForUnknownNodeAndWrongShape) {
  GraphStore store(3, 1);
  EXPECT_THROW(store.state(0), LookupError);
  store.register_node(0);
  NodeState bad = store.state(0);
  bad.u = Tensor::vector({1, 2});
  EXPECT_THROW(store.set_state(0, bad), nd::DimensionError);
  EXPECT_THROW(store.set_state(5, store.state(0)), LookupError);
}

TEST(Reset, ForgetsEverything) {
  GraphStore store(2, 1);
  store.add_event({0, 1, 3.0});
  store.reset();
  EXPECT_EQ(store.node_count(), 0u);
  EXPECT_FALSE(store.current_time().has_value());
  EXPECT_NO_THROW(store.add_event({0, 1, 1.0}));
}

TEST(AdjacencyProperty, SymmetricAndMonotone) {
  Gen gen(77);
  for (int trial = 0; trial < 20; ++trial) {
    GraphStore store(2, 1);
    const auto events = gen.stream(gen.between(2, 15), gen.between(1, 200), 0.0, 2.0);
    std::map<std::pair<NodeId, NodeId>, double> last_seen;
    for (const auto& ev : events) {
      // Stored times never decrease.
      for (NodeId v : store.nodes()) {
        for (const auto& [n, t] : store.target_neighbors(v)) last_seen[{v, n}] = t;
      }
      store.add_event(ev);
      for (NodeId v : store.nodes()) {
        for (const auto& [n, t] : store.target_neighbors(v)) {
          auto it = last_seen.find({v, n});
          if (it != last_seen.end()) ASSERT_GE(t, it->second);
        }
      }
    }
    for (NodeId v : store.nodes()) {
      for (const auto& [g, t] : store.target_neighbors(v)) {
        ASSERT_EQ(store.source_neighbors(g).at(v), t);
      }
      for (const auto& [s, t] : store.source_neighbors(v)) {
        ASSERT_EQ(store.target_neighbors(s).at(v), t);
      }
      ASSERT_LE(*store.state(v).last_event_time, *store.current_time());
    }
  }
}
