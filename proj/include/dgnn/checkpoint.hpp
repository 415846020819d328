#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "dgnn/config.hpp"
#include "dgnn/experiment.hpp"
#include "dgnn/stream_io.hpp"

namespace dgnn {

inline constexpr char kCheckpointMagic[5] = {'D', 'G', 'N', 'N', '\x01'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public InputError {
 public:
  using InputError::InputError;
};

// Checkpoint ids disagree with the data file.
class CompatibilityError : public InputError {
 public:
  using InputError::InputError;
};

// Everything needed to continue a run or to evaluate its best epoch. `resume`
// holds the full training state after `resume.state.epochs_done` epochs; its
// `best` snapshot keeps parameters and node states only (the best store has no
// adjacency and the best state's optimizer and RNG are not stored).
struct Checkpoint {
  ExperimentConfig config;
  IdMap ids;
  std::vector<std::string> class_names;  // node classification only
  ResumePoint resume;
};

// Little-endian binary; doubles are stored bit-for-bit.
void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// Builds the checkpoint for an outcome of run_link_prediction or
// run_node_classification.
template <class Outcome>
Checkpoint make_checkpoint(const ExperimentConfig& cfg, const IdMap& ids, const Outcome& outcome,
                           std::vector<std::string> class_names = {}) {
  Checkpoint ckpt{cfg, ids, std::move(class_names),
                  ResumePoint{outcome.last.state, outcome.best_epoch, outcome.best_score, outcome.best}};
  return ckpt;
}

// Node states of the stored best epoch, keyed by NodeId.
FeatureMap checkpoint_features(const Checkpoint& ckpt);

// Throws CompatibilityError unless every checkpoint id maps to the same
// NodeId in `data` (the data may contain extra ids after them).
void check_compatible(const Checkpoint& ckpt, const IdMap& data);

}  // namespace dgnn
