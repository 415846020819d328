#include "dgnn/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace dgnn {

std::string to_string(Task task) {
  return task == Task::link_prediction ? "link_prediction" : "node_classification";
}
std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::adam ? "adam" : "sgd"; }
std::string to_string(FeatureMode mode) { return mode == FeatureMode::projected ? "projected" : "original"; }

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view expected,
                            std::size_t line) {
  throw ConfigError("config: bad value '" + std::string(value) + "' for " + std::string(key) + " (expected " +
                        std::string(expected) + ")",
                    line);
}

template <class T>
T parse_number(std::string_view key, std::string_view value, std::string_view expected, std::size_t line) {
  T out{};
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc{} || ptr != value.data() + value.size()) bad_value(key, value, expected, line);
  return out;
}

bool parse_bool(std::string_view key, std::string_view value, std::size_t line) {
  if (value == "true" || value == "1" || value == "yes" || value == "on") return true;
  if (value == "false" || value == "0" || value == "no" || value == "off") return false;
  bad_value(key, value, "true or false", line);
}

std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Field {
  std::function<void(ExperimentConfig&, std::string_view, std::size_t)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

using FieldTable = std::vector<std::pair<std::string, Field>>;

template <class Get>
Field count_field(std::string key, Get ref) {
  return Field{[key, ref](ExperimentConfig& c, std::string_view v, std::size_t line) {
                 ref(c) = parse_number<std::size_t>(key, v, "a non-negative integer", line);
               },
               [ref](const ExperimentConfig& c) {
                 return std::to_string(ref(c));
               }};
}

template <class Get>
Field real_field(std::string key, Get ref) {
  return Field{[key, ref](ExperimentConfig& c, std::string_view v, std::size_t line) {
                 ref(c) = parse_number<double>(key, v, "a number", line);
               },
               [ref](const ExperimentConfig& c) { return format_double(ref(c)); }};
}

template <class Get>
Field bool_field(std::string key, Get ref) {
  return Field{[key, ref](ExperimentConfig& c, std::string_view v, std::size_t line) {
                 ref(c) = parse_bool(key, v, line);
               },
               [ref](const ExperimentConfig& c) {
                 return std::string(ref(c) ? "true" : "false");
               }};
}

template <class E, class Get>
Field enum_field(std::string key, std::vector<std::pair<std::string, E>> names, Get ref) {
  std::string expected;
  for (const auto& [name, value] : names) expected += (expected.empty() ? "" : " or ") + name;
  return Field{[key, names, expected, ref](ExperimentConfig& c, std::string_view v, std::size_t line) {
                 for (const auto& [name, value] : names) {
                   if (v == name) {
                     ref(c) = value;
                     return;
                   }
                 }
                 bad_value(key, v, expected, line);
               },
               [names, ref](const ExperimentConfig& c) {
                 for (const auto& [name, value] : names) {
                   if (ref(c) == value) return name;
                 }
                 return std::string("?");
               }};
}

const FieldTable& fields() {
  static const FieldTable table = [] {
    FieldTable t;
    t.emplace_back("dim", count_field("dim", [](auto& c) -> auto& { return c.run.model.dim; }));
    t.emplace_back("tau", real_field("tau", [](auto& c) -> auto& { return c.run.model.tau; }));
    t.emplace_back("decay", enum_field<DecayKind>("decay", {{"reciprocal_log", DecayKind::reciprocal_log}},
                                                  [](auto& c) -> auto& { return c.run.model.decay; }));
    t.emplace_back("propagation", bool_field("propagation", [](auto& c) -> auto& {
                     return c.run.model.propagation_enabled;
                   }));
    t.emplace_back("time_intervals", bool_field("time_intervals", [](auto& c) -> auto& {
                     return c.run.model.time_intervals_enabled;
                   }));
    t.emplace_back("attention", bool_field("attention", [](auto& c) -> auto& {
                     return c.run.model.attention_enabled;
                   }));
    t.emplace_back("batch_size",
                   count_field("batch_size", [](auto& c) -> auto& { return c.run.train.batch_size; }));
    t.emplace_back("negatives",
                   count_field("negatives", [](auto& c) -> auto& { return c.run.train.negatives; }));
    t.emplace_back("lr", real_field("lr", [](auto& c) -> auto& { return c.run.train.lr; }));
    t.emplace_back("epochs", count_field("epochs", [](auto& c) -> auto& { return c.run.train.epochs; }));
    t.emplace_back("optimizer", enum_field<OptimizerKind>(
                                    "optimizer", {{"adam", OptimizerKind::adam}, {"sgd", OptimizerKind::sgd}},
                                    [](auto& c) -> auto& { return c.run.train.optimizer; }));
    t.emplace_back("seed", Field{[](ExperimentConfig& c, std::string_view v, std::size_t line) {
                                   c.run.train.seed =
                                       parse_number<std::uint64_t>("seed", v, "a non-negative integer", line);
                                 },
                                 [](const ExperimentConfig& c) { return std::to_string(c.run.train.seed); }});
    t.emplace_back("task", enum_field<Task>("task",
                                            {{"link_prediction", Task::link_prediction},
                                             {"node_classification", Task::node_classification}},
                                            [](auto& c) -> auto& { return c.run.train.task; }));
    t.emplace_back("labeled_fraction", real_field("labeled_fraction", [](auto& c) -> auto& {
                     return c.run.train.labeled_fraction;
                   }));
    t.emplace_back("literal_negative_term", bool_field("literal_negative_term", [](auto& c) -> auto& {
                     return c.run.train.literal_negative_term;
                   }));
    t.emplace_back("feature_mode", enum_field<FeatureMode>(
                                       "feature_mode",
                                       {{"projected", FeatureMode::projected}, {"original", FeatureMode::original}},
                                       [](auto& c) -> auto& { return c.run.feature_mode; }));
    t.emplace_back("exclude_self",
                   bool_field("exclude_self", [](auto& c) -> auto& { return c.run.exclude_self; }));
    t.emplace_back("seconds_per_unit", real_field("seconds_per_unit", [](auto& c) -> auto& {
                     return c.load.seconds_per_unit;
                   }));
    t.emplace_back("sort", bool_field("sort", [](auto& c) -> auto& { return c.load.sort; }));
    return t;
  }();
  return table;
}

const Field* find_field(std::string_view key) {
  for (const auto& [name, field] : fields()) {
    if (name == key) return &field;
  }
  return nullptr;
}

void validate_at(const ExperimentConfig& cfg, std::size_t line) {
  try {
    cfg.run.model.validate();
    cfg.run.train.validate();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config: ") + e.what(), line);
  }
  if (!(cfg.load.seconds_per_unit > 0.0)) throw ConfigError("config: seconds_per_unit must be positive", line);
}

}  // namespace

void validate_config(const ExperimentConfig& cfg) { validate_at(cfg, 0); }

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value, std::size_t line) {
  const Field* field = find_field(key);
  if (field == nullptr) throw ConfigError("config: unknown key '" + std::string(key) + "'", line);
  field->set(cfg, value, line);
}

ExperimentConfig parse_config(std::istream& in, ExperimentConfig base) {
  std::set<std::string, std::less<>> seen;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string_view text = raw;
    if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
    text = trim(text);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw ConfigError("config: expected 'key = value'", line);
    const std::string_view key = trim(text.substr(0, eq));
    const std::string_view value = trim(text.substr(eq + 1));
    if (key.empty()) throw ConfigError("config: missing key", line);
    if (!seen.insert(std::string(key)).second) {
      throw ConfigError("config: key '" + std::string(key) + "' given twice", line);
    }
    apply_setting(base, key, value, line);
  }
  validate_at(base, 0);
  return base;
}

ExperimentConfig load_config(const std::filesystem::path& path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, std::move(base));
}

std::string to_config_text(const ExperimentConfig& cfg) {
  std::ostringstream out;
  for (const auto& [name, field] : fields()) out << name << " = " << field.get(cfg) << '\n';
  return out.str();
}

std::vector<std::string> config_keys() {
  std::vector<std::string> keys;
  for (const auto& [name, field] : fields()) keys.push_back(name);
  return keys;
}

}  // namespace dgnn
