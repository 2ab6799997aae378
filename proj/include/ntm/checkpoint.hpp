#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ntm/model.hpp"
#include "ntm/tasks.hpp"
#include "ntm/trainer.hpp"

namespace ntm {

/// Raised on unreadable or inconsistent checkpoints; the message names the field.
class CheckpointError : public IoError {
 public:
  using IoError::IoError;
};

inline constexpr char kCheckpointMagic[8] = {'N', 'T', 'M', 'C', 'K', 'P', 'T', '1'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct OptimizerSnapshot {
  OptimizerConfig config;
  OptimizerState state;
};

/// Position of a training run: the data stream seed, how far it got, the
/// partially filled report window and the curve so far.
struct TrainProgress {
  std::uint64_t seed = 0;
  std::uint64_t instances_seen = 0;
  double window_bits = 0.0;
  std::uint64_t window_count = 0;
  std::vector<CurvePoint> curve;
};

/// On-disk layout (little-endian throughout):
///
///   magic "NTMCKPT1", u32 version
///   task: str name, u32 bits, u32 min_len, u32 max_len, u32 min_reps,
///         u32 max_reps, f64 rep_normalizer, u8 split
///   model: u32 N, M, H, input_channels, output_channels
///   u32 count, then per array: str name, u32 rank, u32 dims[rank], f64 data[]
///   u8 has_optimizer [u8 kind, f64 decay, f64 epsilon, f64 momentum,
///                     u64 steps, arrays(square_avg), arrays(velocity)]
///   u8 has_progress  [u64 seed, u64 instances_seen, f64 window_bits,
///                     u64 window_count, u32 n, n x (u64 instances, f64 bits)]
///
/// where str is a u32 byte length followed by the bytes.
struct Checkpoint {
  ModelConfig model_config;
  TaskConfig task;
  std::vector<Parameter> parameters;
  std::optional<OptimizerSnapshot> optimizer;
  std::optional<TrainProgress> progress;

  static Checkpoint of(const NtmModel& model, const TaskConfig& task);
  /// Validates names and shapes against model_config.
  NtmModel model() const;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ckpt);
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

void save_checkpoint(const NtmModel& model, const TaskConfig& task,
                     const std::filesystem::path& path);
NtmModel load_model(const std::filesystem::path& path);

/// Snapshot of a running training session.
Checkpoint checkpoint_of(const TrainState& state, const TaskConfig& task, const TrainConfig& cfg);
/// Inverse of checkpoint_of; missing optimizer or progress sections start fresh.
TrainState restore_training(const Checkpoint& ckpt);

}  // namespace ntm
