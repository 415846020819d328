#pragma once

#include <cstddef>
#include <cstdint>

#include "dgnn/stream_io.hpp"

namespace dgnn {

// Planted-community interaction stream. Sources are drawn uniformly; the
// target lies in the source's community with probability intra_fraction and
// is otherwise drawn from the other communities. Within the chosen community
// targets are drawn with weight proportional to rank^-popularity_exponent
// (0 gives uniform). Timestamps increase by an exponential gap.
struct CommunityStreamConfig {
  std::size_t nodes = 300;
  std::size_t events = 3000;
  std::size_t communities = 3;
  double intra_fraction = 0.9;
  double popularity_exponent = 0.0;
  double mean_gap_seconds = 3600.0;
  std::int64_t start_time = 1'000'000'000;
  std::uint64_t seed = 0;

  void validate() const;
};

// Node i belongs to community i % communities. Ids are interned as "n<i>".
EdgeStream generate_community_stream(const CommunityStreamConfig& cfg);

std::size_t community_of(std::size_t node, std::size_t communities);

}  // namespace dgnn
