#include "dgnn/report.hpp"

#include <algorithm>
#include <charconv>
#include <ostream>
#include <sstream>

namespace dgnn {

std::string format_real(double x) {
  char buf[64];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

void write_metrics_csv(std::ostream& out, std::span<const EpochRecord> history, bool timing) {
  out << "epoch,mean_loss,events_per_sec\n";
  for (const auto& r : history) {
    out << r.epoch << ',' << format_real(r.metrics.mean_loss) << ','
        << format_real(timing ? r.metrics.events_per_sec : 0.0) << '\n';
  }
}

std::vector<ResultRow> link_prediction_rows(const LinkPredictionReport& report, std::uint64_t seed,
                                            const std::string& variant, double tau) {
  return {
      ResultRow{"mrr", report.mrr, std::nullopt, seed, variant, tau},
      ResultRow{"recall", report.recall_20, 20, seed, variant, tau},
      ResultRow{"recall", report.recall_50, 50, seed, variant, tau},
      ResultRow{"pairs", static_cast<double>(report.pairs), std::nullopt, seed, variant, tau},
      ResultRow{"unseen_pairs", static_cast<double>(report.unseen_pairs), std::nullopt, seed, variant, tau},
  };
}

std::vector<ResultRow> classification_rows(const F1Scores& scores, std::uint64_t seed, const std::string& variant,
                                           double tau) {
  return {
      ResultRow{"f1_micro", scores.micro, std::nullopt, seed, variant, tau},
      ResultRow{"f1_macro", scores.macro, std::nullopt, seed, variant, tau},
  };
}

void write_results_csv(std::ostream& out, std::span<const ResultRow> rows) {
  out << "metric,value,k,seed,variant,tau\n";
  for (const auto& r : rows) {
    out << r.metric << ',' << format_real(r.value) << ',' << (r.k ? std::to_string(*r.k) : "") << ',' << r.seed
        << ',' << r.variant << ',' << format_real(r.tau) << '\n';
  }
}

void write_ranks_csv(std::ostream& out, std::span<const RankResult> ranks, const IdMap& ids) {
  out << "query,truth,direction,rank,candidates\n";
  for (const auto& r : ranks) {
    out << ids.name(r.pair.query) << ',' << ids.name(r.pair.truth) << ','
        << (r.pair.direction == Direction::rank_targets ? "targets" : "sources") << ',' << r.rank << ','
        << r.candidates << '\n';
  }
}

void write_ablation_csv(std::ostream& out, std::span<const AblationRow> rows) {
  out << "variant,mrr,recall_20,recall_50,pairs,unseen_pairs\n";
  for (const auto& r : rows) {
    out << variant_name(r.variant) << ',' << format_real(r.test.mrr) << ',' << format_real(r.test.recall_20) << ','
        << format_real(r.test.recall_50) << ',' << r.test.pairs << ',' << r.test.unseen_pairs << '\n';
  }
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  std::vector<SweepRow> sorted(rows.begin(), rows.end());
  std::stable_sort(sorted.begin(), sorted.end(), [](const SweepRow& a, const SweepRow& b) { return a.tau < b.tau; });
  out << "tau,mrr,recall_20,recall_50\n";
  for (const auto& r : sorted) {
    out << format_real(r.tau) << ',' << format_real(r.test.mrr) << ',' << format_real(r.test.recall_20) << ','
        << format_real(r.test.recall_50) << '\n';
  }
}

void write_embeddings(std::ostream& out, const FeatureMap& features, const IdMap& ids) {
  for (NodeId v = 0; v < ids.size(); ++v) {
    auto it = features.find(v);
    if (it == features.end()) continue;
    out << ids.name(v) << '\t';
    const auto values = it->second.values();
    for (std::size_t i = 0; i < values.size(); ++i) out << (i ? " " : "") << format_real(values[i]);
    out << '\n';
  }
}

std::vector<std::pair<std::string, Tensor>> read_embeddings(std::istream& in) {
  std::vector<std::pair<std::string, Tensor>> rows;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw InputError("embeddings: missing tab", number);
    std::vector<double> values;
    std::istringstream fields(line.substr(tab + 1));
    std::string token;
    while (fields >> token) {
      double x = 0.0;
      const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), x);
      if (ec != std::errc{} || ptr != token.data() + token.size()) {
        throw InputError("embeddings: bad value '" + token + "'", number);
      }
      values.push_back(x);
    }
    rows.emplace_back(line.substr(0, tab), Tensor::vector(std::move(values)));
  }
  return rows;
}

}  // namespace dgnn
