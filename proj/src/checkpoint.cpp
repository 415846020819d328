#include "dgnn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

namespace dgnn {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

namespace {

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void raw(const void* data, std::size_t n) { out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(n)); }
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  void str(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void tensor(const Tensor& t) {
    u64(t.rank());
    for (std::size_t d : t.shape()) u64(d);
    u64(t.size());
    raw(t.data().data(), t.size() * sizeof(double));
  }
  void params(const ModelParams& p) {
    u64(kParamTensorCount);
    visit_params(
        [&](const std::string& name, const Tensor& t) {
          str(name);
          tensor(t);
        },
        p);
  }
  void optional_time(const std::optional<double>& t) {
    u8(t.has_value() ? 1 : 0);
    f64(t.value_or(0.0));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  void raw(void* data, std::size_t n) {
    in_.read(static_cast<char*>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) throw CheckpointError("checkpoint: truncated file");
  }
  std::uint8_t u8() {
    std::uint8_t v;
    raw(&v, 1);
    return v;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    raw(&v, 4);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v;
    raw(&v, 8);
    return v;
  }
  double f64() {
    double v;
    raw(&v, 8);
    return v;
  }
  std::size_t count(std::uint64_t limit, const char* what) {
    const std::uint64_t n = u64();
    if (n > limit) throw CheckpointError(std::string("checkpoint: implausible ") + what);
    return static_cast<std::size_t>(n);
  }
  std::string str() {
    std::string s(count(std::uint64_t{1} << 32, "string length"), '\0');
    raw(s.data(), s.size());
    return s;
  }
  Tensor tensor() {
    nd::Shape shape(count(2, "tensor rank"));
    std::size_t expected = 1;
    for (auto& d : shape) {
      d = count(std::uint64_t{1} << 32, "tensor dimension");
      expected *= d;
    }
    const std::size_t n = count(std::uint64_t{1} << 36, "tensor size");
    if (n != expected) throw CheckpointError("checkpoint: tensor size does not match its shape");
    std::vector<double> values(n);
    raw(values.data(), n * sizeof(double));
    return Tensor(std::move(shape), std::move(values));
  }
  ModelParams params() {
    if (u64() != kParamTensorCount) throw CheckpointError("checkpoint: wrong number of parameter tensors");
    ModelParams p;
    visit_params(
        [&](const std::string& name, Tensor& t) {
          const std::string stored = str();
          if (stored != name) {
            throw CheckpointError("checkpoint: expected parameter " + name + ", found " + stored);
          }
          t = tensor();
        },
        p);
    return p;
  }
  std::optional<double> optional_time() {
    const bool present = u8() != 0;
    const double t = f64();
    return present ? std::optional<double>(t) : std::nullopt;
  }

 private:
  std::istream& in_;
};

void check_shapes(const ModelParams& reference, const ModelParams& other, const char* what) {
  visit_params(
      [&](const std::string& name, const Tensor& a, const Tensor& b) {
        if (a.shape() != b.shape()) {
          throw CheckpointError(std::string("checkpoint: ") + what + " " + name + " has shape " +
                                nd::shape_string(b.shape()) + ", parameters have " + nd::shape_string(a.shape()));
        }
      },
      reference, other);
}

}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt) {
  Writer w(out);
  w.raw(kCheckpointMagic, sizeof kCheckpointMagic);
  w.u32(kCheckpointVersion);
  w.str(to_config_text(ckpt.config));

  w.u64(ckpt.ids.size());
  for (const auto& name : ckpt.ids.names()) w.str(name);
  w.u64(ckpt.class_names.size());
  for (const auto& name : ckpt.class_names) w.str(name);

  const TrainingState& s = ckpt.resume.state;
  w.params(s.params);
  w.params(s.optimizer.first_moment);
  w.params(s.optimizer.second_moment);
  w.u64(s.optimizer.step);
  std::ostringstream rng;
  rng << s.rng;
  w.str(rng.str());
  w.u64(s.epochs_done);

  w.u64(ckpt.resume.best_epoch);
  w.f64(ckpt.resume.best_score);
  const bool has_best = ckpt.resume.best.has_value();
  w.u8(has_best ? 1 : 0);
  if (has_best) {
    const Snapshot& best = *ckpt.resume.best;
    w.params(best.state.params);
    w.u64(best.store.dim());
    w.u64(best.store.seed());
    const auto nodes = best.store.nodes();
    w.u64(nodes.size());
    for (NodeId v : nodes) {
      const NodeState& st = best.store.state(v);
      w.u32(v);
      w.tensor(st.c_src);
      w.tensor(st.h_src);
      w.tensor(st.c_dst);
      w.tensor(st.h_dst);
      w.tensor(st.u);
      w.optional_time(st.last_event_time);
    }
  }
  if (!out) throw CheckpointError("checkpoint: write failed");
}

Checkpoint read_checkpoint(std::istream& in) {
  Reader r(in);
  char magic[sizeof kCheckpointMagic];
  r.raw(magic, sizeof magic);
  if (std::memcmp(magic, kCheckpointMagic, sizeof magic) != 0) throw CheckpointError("checkpoint: bad magic header");
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw CheckpointError("checkpoint: unsupported format version " + std::to_string(version));
  }

  std::istringstream config_text(r.str());
  Checkpoint ckpt{.config = parse_config(config_text), .ids = {}, .class_names = {},
                  .resume = {.state = {}, .best_epoch = 0, .best_score = 0.0, .best = std::nullopt}};

  const std::size_t n_ids = r.count(std::uint64_t{1} << 32, "id count");
  for (std::size_t i = 0; i < n_ids; ++i) {
    const std::string name = r.str();
    if (ckpt.ids.intern(name) != i) throw CheckpointError("checkpoint: duplicate node id " + name);
  }
  const std::size_t n_classes = r.count(std::uint64_t{1} << 32, "class count");
  for (std::size_t i = 0; i < n_classes; ++i) ckpt.class_names.push_back(r.str());

  TrainingState& s = ckpt.resume.state;
  s.params = r.params();
  s.optimizer.first_moment = r.params();
  s.optimizer.second_moment = r.params();
  check_shapes(s.params, s.optimizer.first_moment, "first moment");
  check_shapes(s.params, s.optimizer.second_moment, "second moment");
  s.optimizer.step = r.u64();
  std::istringstream rng(r.str());
  rng >> s.rng;
  if (!rng) throw CheckpointError("checkpoint: unreadable RNG state");
  s.epochs_done = r.u64();
  if (s.params.interact_w_src.rows() != ckpt.config.run.model.dim) {
    throw CheckpointError("checkpoint: parameter dimension does not match the stored config");
  }

  ckpt.resume.best_epoch = r.u64();
  ckpt.resume.best_score = r.f64();
  if (r.u8() != 0) {
    TrainingState best_state;
    best_state.params = r.params();
    check_shapes(s.params, best_state.params, "best parameter");
    best_state.optimizer = make_optimizer_state(best_state.params);
    best_state.epochs_done = ckpt.resume.best_epoch;
    const std::size_t dim = r.count(std::uint64_t{1} << 32, "dimension");
    const std::uint64_t seed = r.u64();
    GraphStore store(dim, seed);
    const std::size_t n_nodes = r.count(std::uint64_t{1} << 32, "node count");
    for (std::size_t i = 0; i < n_nodes; ++i) {
      const NodeId v = r.u32();
      NodeState st;
      st.c_src = r.tensor();
      st.h_src = r.tensor();
      st.c_dst = r.tensor();
      st.h_dst = r.tensor();
      st.u = r.tensor();
      st.last_event_time = r.optional_time();
      store.register_node(v);
      try {
        store.set_state(v, std::move(st));
      } catch (const std::exception& e) {
        throw CheckpointError(std::string("checkpoint: bad node state: ") + e.what());
      }
    }
    ckpt.resume.best = Snapshot{std::move(best_state), std::move(store)};
  }
  if (in.peek() != std::char_traits<char>::eof()) throw CheckpointError("checkpoint: trailing bytes");
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
  write_checkpoint(out, ckpt);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  return read_checkpoint(in);
}

FeatureMap checkpoint_features(const Checkpoint& ckpt) {
  if (!ckpt.resume.best) throw CheckpointError("checkpoint: no trained epoch stored");
  return features_of(ckpt.resume.best->store);
}

void check_compatible(const Checkpoint& ckpt, const IdMap& data) {
  if (data.size() < ckpt.ids.size()) {
    throw CompatibilityError("checkpoint knows " + std::to_string(ckpt.ids.size()) + " node ids, data only " +
                             std::to_string(data.size()));
  }
  for (std::size_t i = 0; i < ckpt.ids.size(); ++i) {
    if (ckpt.ids.names()[i] != data.names()[i]) {
      throw CompatibilityError("node id mapping differs at index " + std::to_string(i) + ": checkpoint has '" +
                               ckpt.ids.names()[i] + "', data has '" + data.names()[i] + "'");
    }
  }
}

}  // namespace dgnn
