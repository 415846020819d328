#include "dgnn/stream_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

namespace dgnn {

namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    if (i >= line.size()) break;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

bool skippable(std::string_view line) {
  const auto first = line.find_first_not_of(" \t\r");
  return first == std::string_view::npos || line[first] == '#' || line[first] == '%';
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  return in;
}

}  // namespace

InputError::InputError(const std::string& what, std::size_t line)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

NodeId IdMap::intern(std::string_view name) {
  std::string key(name);
  auto it = index_.find(key);
  if (it != index_.end()) return it->second;
  const auto id = static_cast<NodeId>(names_.size());
  names_.push_back(key);
  index_.emplace(std::move(key), id);
  return id;
}

std::optional<NodeId> IdMap::find(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

EdgeStream read_edge_stream(std::istream& in, const StreamLoadOptions& options) {
  if (!(options.seconds_per_unit > 0.0)) throw InputError("seconds_per_unit must be positive");

  struct Raw {
    std::string src;
    std::string dst;
    std::int64_t ts;
  };
  std::vector<Raw> raw;
  std::string line;
  std::size_t lineno = 0;
  bool sorted = true;
  std::size_t first_unsorted_line = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 3 && fields.size() != 4) {
      throw InputError("expected 3 fields (src, dst, timestamp), got " + std::to_string(fields.size()),
                       lineno);
    }
    // Four columns: src, dst, weight, timestamp. The weight is ignored.
    std::int64_t ts = 0;
    const auto f = fields.back();
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), ts);
    if (ec != std::errc() || ptr != f.data() + f.size()) {
      throw InputError("malformed timestamp '" + std::string(f) + "'", lineno);
    }
    if (!raw.empty() && ts < raw.back().ts && sorted) {
      sorted = false;
      first_unsorted_line = lineno;
    }
    raw.push_back(Raw{std::string(fields[0]), std::string(fields[1]), ts});
  }

  if (!sorted && !options.sort) {
    throw UnsortedStreamError("edge stream is not sorted by timestamp (use --sort to sort on load)",
                     first_unsorted_line);
  }
  if (!sorted) {
    std::stable_sort(raw.begin(), raw.end(), [](const Raw& a, const Raw& b) { return a.ts < b.ts; });
  }

  EdgeStream out;
  out.was_sorted = sorted;
  out.events.reserve(raw.size());
  out.timestamps.reserve(raw.size());
  for (const Raw& r : raw) {
    const NodeId s = out.ids.intern(r.src);
    const NodeId d = out.ids.intern(r.dst);
    out.events.push_back(InteractionEvent{s, d, static_cast<double>(r.ts) / options.seconds_per_unit});
    out.timestamps.push_back(r.ts);
  }
  return out;
}

EdgeStream load_edge_stream(const std::filesystem::path& path, const StreamLoadOptions& options) {
  auto in = open(path);
  return read_edge_stream(in, options);
}

StreamSummary summarize(const EdgeStream& stream) {
  StreamSummary s;
  s.events = stream.events.size();
  s.nodes = stream.ids.size();
  s.sorted = stream.was_sorted;
  if (!stream.timestamps.empty()) {
    const auto [lo, hi] = std::minmax_element(stream.timestamps.begin(), stream.timestamps.end());
    s.duration_days = static_cast<double>(*hi - *lo) / kSecondsPerDay;
  }
  return s;
}

std::vector<NodeId> NodeLabels::labeled_nodes() const {
  std::vector<NodeId> out;
  out.reserve(label_of.size());
  for (const auto& [node, label] : label_of) out.push_back(node);
  std::sort(out.begin(), out.end());
  return out;
}

NodeLabels read_labels(std::istream& in, const IdMap& ids) {
  std::vector<std::pair<std::string, std::string>> rows;
  std::set<std::string> names;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skippable(line)) continue;
    const auto fields = split_fields(line);
    if (fields.size() != 2) {
      throw InputError("expected 2 fields (node_id, label), got " + std::to_string(fields.size()), lineno);
    }
    rows.emplace_back(std::string(fields[0]), std::string(fields[1]));
    names.insert(std::string(fields[1]));
  }

  NodeLabels out;
  out.class_names.assign(names.begin(), names.end());
  std::map<std::string, std::size_t> class_index;
  for (std::size_t i = 0; i < out.class_names.size(); ++i) class_index[out.class_names[i]] = i;
  std::map<std::string, std::string> first_label;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& [node, label] = rows[i];
    const auto [prior, fresh] = first_label.emplace(node, label);
    if (!fresh && prior->second != label) {
      throw InputError("node '" + node + "' labeled both '" + prior->second + "' and '" + label + "'");
    }
    auto id = ids.find(node);
    if (!id) {
      if (fresh) ++out.unknown_nodes;
      continue;
    }
    out.label_of[*id] = class_index.at(label);
  }
  return out;
}

NodeLabels load_labels(const std::filesystem::path& path, const IdMap& ids) {
  auto in = open(path);
  return read_labels(in, ids);
}

}  // namespace dgnn
