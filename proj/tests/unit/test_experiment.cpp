#include <gtest/gtest.h>

#include <sstream>

#include "dgnn/checkpoint.hpp"
#include "dgnn/experiment.hpp"
#include "dgnn/synthetic.hpp"

using namespace dgnn;

namespace {

EdgeStream small_stream(std::uint64_t seed = 2) {
  CommunityStreamConfig sc;
  sc.nodes = 24;
  sc.events = 200;
  sc.popularity_exponent = 1.0;
  sc.seed = seed;
  return generate_community_stream(sc);
}

RunConfig small_config() {
  RunConfig cfg;
  cfg.model.dim = 4;
  cfg.model.tau = 1.0;
  cfg.train.batch_size = 25;
  cfg.train.epochs = 2;
  cfg.train.seed = 5;
  return cfg;
}

ResumePoint through_checkpoint(const ExperimentConfig& cfg, const IdMap& ids, const LinkPredictionOutcome& outcome) {
  std::stringstream buf;
  write_checkpoint(buf, make_checkpoint(cfg, ids, outcome));
  return read_checkpoint(buf).resume;
}

}  // namespace

TEST(Variants, NamesAndFlags) {
  EXPECT_EQ(variant_name(Variant::full), "DGNN");
  EXPECT_EQ(variant_name(parse_variant("prop")), "DGNN-prop");
  EXPECT_EQ(variant_name(parse_variant("ti")), "DGNN-ti");
  EXPECT_EQ(variant_name(parse_variant("att")), "DGNN-att");
  EXPECT_THROW(parse_variant("dropout"), std::invalid_argument);
  const HyperParams hp;
  EXPECT_FALSE(apply_variant(hp, Variant::no_prop).propagation_enabled);
  EXPECT_FALSE(apply_variant(hp, Variant::no_ti).time_intervals_enabled);
  EXPECT_FALSE(apply_variant(hp, Variant::no_att).attention_enabled);
  EXPECT_EQ(apply_variant(hp, Variant::full), hp);
}

TEST(LinkPredictionRun, HistoryAndBestEpoch) {
  const EdgeStream s = small_stream();
  RunConfig cfg = small_config();
  cfg.train.epochs = 3;
  std::size_t callbacks = 0;
  const auto outcome = run_link_prediction(s.events, cfg, std::nullopt,
                                           [&](const EpochRecord& r, const Snapshot& snap) {
                                             ++callbacks;
                                             EXPECT_EQ(r.epoch, callbacks);
                                             EXPECT_EQ(snap.state.epochs_done, callbacks);
                                           });
  EXPECT_EQ(callbacks, 3u);
  ASSERT_EQ(outcome.history.size(), 3u);
  double best = -1.0;
  std::size_t best_epoch = 0;
  for (const auto& r : outcome.history) {
    if (r.valid_score > best) {
      best = r.valid_score;
      best_epoch = r.epoch;
    }
  }
  EXPECT_EQ(outcome.best_epoch, best_epoch);
  EXPECT_EQ(outcome.best_score, best);
  EXPECT_EQ(outcome.valid.mrr, best);
  EXPECT_EQ(outcome.best.state.epochs_done, best_epoch);
  EXPECT_EQ(outcome.last.state.epochs_done, 3u);
  EXPECT_GT(outcome.test.pairs, 0u);
}

TEST(LinkPredictionRun, ResumeThroughCheckpointIsBitExact) {
  const EdgeStream s = small_stream();
  ExperimentConfig cfg;
  cfg.run = small_config();
  const auto straight = run_link_prediction(s.events, cfg.run);

  ExperimentConfig first = cfg;
  first.run.train.epochs = 1;
  const auto half = run_link_prediction(s.events, first.run);
  const auto resumed = run_link_prediction(s.events, cfg.run, through_checkpoint(first, s.ids, half));

  EXPECT_TRUE(resumed.last.state.params == straight.last.state.params);
  EXPECT_TRUE(resumed.last.state.optimizer.first_moment == straight.last.state.optimizer.first_moment);
  EXPECT_EQ(resumed.last.state.rng, straight.last.state.rng);
  EXPECT_EQ(resumed.last.store, straight.last.store);
  EXPECT_EQ(resumed.best_epoch, straight.best_epoch);
  EXPECT_EQ(resumed.best_score, straight.best_score);
  EXPECT_EQ(resumed.test.mrr, straight.test.mrr);
  EXPECT_EQ(resumed.test.recall_50, straight.test.recall_50);
  ASSERT_EQ(resumed.history.size(), 1u);
  EXPECT_EQ(resumed.history[0].metrics.mean_loss, straight.history[1].metrics.mean_loss);
}

TEST(LinkPredictionRun, DeterministicForFixedSeed) {
  const EdgeStream s = small_stream();
  const auto a = run_link_prediction(s.events, small_config());
  const auto b = run_link_prediction(s.events, small_config());
  EXPECT_TRUE(a.last.state.params == b.last.state.params);
  EXPECT_EQ(a.test.mrr, b.test.mrr);
}

TEST(LinkPredictionRun, ZeroEpochsScoresInitialModel) {
  const EdgeStream s = small_stream();
  RunConfig cfg = small_config();
  cfg.train.epochs = 0;
  const auto outcome = run_link_prediction(s.events, cfg);
  EXPECT_TRUE(outcome.history.empty());
  EXPECT_EQ(outcome.best_epoch, 0u);
  EXPECT_GT(outcome.test.pairs, 0u);
}

TEST(InitialFeatures, UsesTrainingPrefixNodes) {
  const EdgeStream s = small_stream();
  const RunConfig cfg = small_config();
  const LinkPredictionReport r = evaluate_initial_features(s.events, cfg);
  const TemporalSplit split = temporal_split(s.events);
  EXPECT_EQ(r.pairs + r.unseen_pairs, 2 * split.test.size());
  EXPECT_GT(r.mrr, 0.0);
  EXPECT_EQ(evaluate_initial_features(s.events, cfg).mrr, r.mrr);
}

TEST(Ablation, FullFirstThenVariants) {
  const EdgeStream s = small_stream();
  RunConfig cfg = small_config();
  cfg.train.epochs = 1;
  const std::vector<Variant> asked{Variant::no_att, Variant::no_prop, Variant::no_att};
  const auto rows = run_ablation(s.events, cfg, asked);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].variant, Variant::full);
  EXPECT_EQ(rows[1].variant, Variant::no_att);
  EXPECT_EQ(rows[2].variant, Variant::no_prop);
  RunConfig no_prop = cfg;
  no_prop.model.propagation_enabled = false;
  EXPECT_EQ(rows[2].test.mrr, run_link_prediction(s.events, no_prop).test.mrr);
}

TEST(Sweep, DefaultGridAndOrdering) {
  const std::vector<double> grid = default_tau_grid();
  EXPECT_EQ(grid, (std::vector<double>{1, 7, 10, 20, 30, 40, 50, 60, 70, 80, 90, 100}));
  const EdgeStream s = small_stream();
  RunConfig cfg = small_config();
  cfg.train.epochs = 1;
  const auto rows = run_tau_sweep(s.events, cfg, {7, 0, 1, 7});
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[0].tau, 0.0);
  EXPECT_EQ(rows[1].tau, 1.0);
  EXPECT_EQ(rows[2].tau, 7.0);
  RunConfig no_prop = cfg;
  no_prop.model.propagation_enabled = false;
  EXPECT_EQ(rows[0].test.mrr, run_link_prediction(s.events, no_prop).test.mrr);
}

TEST(NodeClassificationRun, TrainsOnVisibleLabelsOnly) {
  const EdgeStream s = small_stream();
  NodeLabels labels;
  labels.class_names = {"a", "b", "c"};
  for (NodeId v = 0; v < s.ids.size(); ++v) {
    labels.label_of[v] = community_of(std::stoul(s.ids.name(v).substr(1)), 3);
  }
  RunConfig cfg = small_config();
  cfg.train.task = Task::node_classification;
  cfg.train.labeled_fraction = 0.6;
  const auto outcome = run_node_classification(s.events, labels, cfg);
  const std::size_t n = labels.label_of.size();
  EXPECT_EQ(outcome.split.valid.size() + outcome.split.test.size(), n * 2 / 10);
  ASSERT_EQ(outcome.history.size(), 2u);
  EXPECT_EQ(outcome.valid.micro, outcome.best_score);
  EXPECT_GE(outcome.test.micro, 0.0);
  EXPECT_LE(outcome.test.micro, 1.0);
  EXPECT_EQ(outcome.best.state.params.classifier.shape(), (nd::Shape{3, 4}));
}
