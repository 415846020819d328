#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dgnn/eval.hpp"
#include "dgnn/experiment.hpp"
#include "dgnn/stream_io.hpp"

namespace dgnn {

// Shortest text that reads back to the same double.
std::string format_real(double x);

// `epoch,mean_loss,events_per_sec`. With `timing` off the throughput column
// is written as 0 so reruns produce identical files.
void write_metrics_csv(std::ostream& out, std::span<const EpochRecord> history, bool timing = true);

struct ResultRow {
  std::string metric;
  double value = 0.0;
  std::optional<std::size_t> k;  // cut-off for recall rows
  std::uint64_t seed = 0;
  std::string variant;
  double tau = 0.0;
};

std::vector<ResultRow> link_prediction_rows(const LinkPredictionReport& report, std::uint64_t seed,
                                            const std::string& variant, double tau);
std::vector<ResultRow> classification_rows(const F1Scores& scores, std::uint64_t seed,
                                           const std::string& variant, double tau);
// `metric,value,k,seed,variant,tau`
void write_results_csv(std::ostream& out, std::span<const ResultRow> rows);

// `query,truth,direction,rank,candidates` with external ids.
void write_ranks_csv(std::ostream& out, std::span<const RankResult> ranks, const IdMap& ids);

// `variant,mrr,recall_20,recall_50,pairs,unseen_pairs`
void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows);
// `tau,mrr,recall_20,recall_50`, ascending in tau.
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

// One line per known node: `external_id<TAB>v1 v2 ... vd`.
void write_embeddings(std::ostream& out, const FeatureMap& features, const IdMap& ids);
// Inverse of write_embeddings; rows keyed by external id in file order.
std::vector<std::pair<std::string, Tensor>> read_embeddings(std::istream& in);

}  // namespace dgnn
