#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "dgnn/graph_store.hpp"

namespace dgnn {

inline constexpr double kSecondsPerDay = 86400.0;

// Malformed input file; carries the 1-based line number when known.
class InputError : public std::runtime_error {
 public:
  InputError(const std::string& what, std::size_t line = 0);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Input timestamps are not ascending.
class UnsortedStreamError : public InputError {
 public:
  using InputError::InputError;
};

// Maps external string ids to dense NodeIds in order of first appearance.
class IdMap {
 public:
  NodeId intern(std::string_view name);
  std::optional<NodeId> find(std::string_view name) const;
  const std::string& name(NodeId id) const { return names_.at(id); }
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

  bool operator==(const IdMap& other) const { return names_ == other.names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, NodeId> index_;
};

struct EdgeStream {
  IdMap ids;
  std::vector<InteractionEvent> events;
  std::vector<std::int64_t> timestamps;  // raw epoch seconds, parallel to events
  bool was_sorted = true;
};

struct StreamLoadOptions {
  bool sort = false;
  double seconds_per_unit = kSecondsPerDay;
};

// Lines: `src<TAB>dst<TAB>unix_timestamp`, or `src dst weight timestamp` as
// in KONECT dumps (weight ignored). Blank lines and lines starting
// with '#' or '%' are skipped. Unsorted input is an UnsortedStreamError unless
// options.sort is set, in which case events are stably sorted by time.
EdgeStream read_edge_stream(std::istream& in, const StreamLoadOptions& options = {});
EdgeStream load_edge_stream(const std::filesystem::path& path, const StreamLoadOptions& options = {});

struct StreamSummary {
  std::size_t events = 0;
  std::size_t nodes = 0;
  double duration_days = 0.0;
  bool sorted = true;
};

StreamSummary summarize(const EdgeStream& stream);

struct NodeLabels {
  std::vector<std::string> class_names;              // sorted; index = class id
  std::unordered_map<NodeId, std::size_t> label_of;  // only nodes present in the id map
  std::size_t unknown_nodes = 0;                     // labeled ids absent from the stream

  std::size_t num_classes() const { return class_names.size(); }
  std::vector<NodeId> labeled_nodes() const;  // ascending
};

// Lines: `node_id<TAB>label_string`.
NodeLabels read_labels(std::istream& in, const IdMap& ids);
NodeLabels load_labels(const std::filesystem::path& path, const IdMap& ids);

}  // namespace dgnn
