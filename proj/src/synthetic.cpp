#include "dgnn/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace dgnn {

void CommunityStreamConfig::validate() const {
  if (communities < 1) throw std::invalid_argument("synthetic: need at least one community");
  if (nodes < 2 * communities) throw std::invalid_argument("synthetic: need at least two nodes per community");
  if (!(intra_fraction >= 0.0 && intra_fraction <= 1.0)) {
    throw std::invalid_argument("synthetic: intra_fraction must be in [0, 1]");
  }
  if (communities == 1 && intra_fraction < 1.0) {
    throw std::invalid_argument("synthetic: a single community cannot have cross-community events");
  }
  if (!(popularity_exponent >= 0.0)) throw std::invalid_argument("synthetic: popularity_exponent must be >= 0");
  if (!(mean_gap_seconds > 0.0)) throw std::invalid_argument("synthetic: mean_gap_seconds must be positive");
}

std::size_t community_of(std::size_t node, std::size_t communities) { return node % communities; }

EdgeStream generate_community_stream(const CommunityStreamConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);

  // Members per community, each with its own popularity draw.
  std::vector<std::vector<std::size_t>> members(cfg.communities);
  for (std::size_t v = 0; v < cfg.nodes; ++v) members[community_of(v, cfg.communities)].push_back(v);
  std::vector<std::discrete_distribution<std::size_t>> pick;
  for (auto& group : members) {
    std::shuffle(group.begin(), group.end(), rng);
    std::vector<double> weights(group.size());
    for (std::size_t r = 0; r < group.size(); ++r) {
      weights[r] = std::pow(static_cast<double>(r + 1), -cfg.popularity_exponent);
    }
    pick.emplace_back(weights.begin(), weights.end());
  }

  std::uniform_int_distribution<std::size_t> any_node(0, cfg.nodes - 1);
  std::uniform_int_distribution<std::size_t> other_offset(1, std::max<std::size_t>(1, cfg.communities - 1));
  std::bernoulli_distribution intra(cfg.intra_fraction);
  std::exponential_distribution<double> gap(1.0 / cfg.mean_gap_seconds);

  EdgeStream out;
  out.was_sorted = true;
  for (std::size_t v = 0; v < cfg.nodes; ++v) out.ids.intern("n" + std::to_string(v));

  double clock = static_cast<double>(cfg.start_time);
  for (std::size_t k = 0; k < cfg.events; ++k) {
    const std::size_t src = any_node(rng);
    const std::size_t home = community_of(src, cfg.communities);
    const std::size_t target_comm = intra(rng) ? home : (home + other_offset(rng)) % cfg.communities;
    std::size_t dst = src;
    while (dst == src) dst = members[target_comm][pick[target_comm](rng)];

    clock += std::max(1.0, std::round(gap(rng)));
    const auto stamp = static_cast<std::int64_t>(clock);
    out.timestamps.push_back(stamp);
    out.events.push_back(InteractionEvent{static_cast<NodeId>(src), static_cast<NodeId>(dst),
                                          static_cast<double>(stamp) / kSecondsPerDay});
  }
  return out;
}

}  // namespace dgnn
