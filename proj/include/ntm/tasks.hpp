#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ntm/rng.hpp"
#include "ntm/tensor.hpp"

namespace ntm {

/// Bit-sum partition of binary vectors: Test holds the vectors whose popcount
/// is exactly half the width, Train holds all the others.
enum class Split { Train, Test, All };

std::string_view to_string(Split split);
Split parse_split(std::string_view text);

using Mask = std::vector<bool>;

/// One task sequence. `input` and `target` share the time axis; `mask` marks
/// the recall steps, the only steps where the target may be nonzero and the
/// only steps that are scored.
struct TaskInstance {
  Tensor input;   // [T x input_channels]
  Tensor target;  // [T x target_channels]
  Mask mask;      // [T]
  std::size_t length = 0;
  std::size_t reps = 1;
  /// Stream index the instance was drawn from; 0 for ad-hoc generation.
  std::uint64_t stream = 0;

  std::size_t steps() const { return mask.size(); }
  std::size_t recall_steps() const;
};

struct CopyConfig {
  std::size_t bits = 8;
  std::size_t min_len = 1;
  std::size_t max_len = 20;
  Split split = Split::Train;

  void validate() const;
  /// Data channels plus one delimiter channel.
  std::size_t input_channels() const { return bits + 1; }
  std::size_t target_channels() const { return bits; }
};

struct RepeatCopyConfig {
  std::size_t bits = 6;
  std::size_t min_len = 1;
  std::size_t max_len = 10;
  std::size_t min_reps = 1;
  std::size_t max_reps = 10;
  /// The count channel carries reps / rep_normalizer.
  double rep_normalizer = 10.0;
  Split split = Split::All;

  void validate() const;
  /// Data channels, delimiter, repeat count.
  std::size_t input_channels() const { return bits + 2; }
  /// Data channels plus the end marker.
  std::size_t target_channels() const { return bits + 1; }
};

using TaskConfig = std::variant<CopyConfig, RepeatCopyConfig>;

std::string_view task_name(const TaskConfig& task);
std::size_t input_channels(const TaskConfig& task);
std::size_t target_channels(const TaskConfig& task);
std::size_t data_bits(const TaskConfig& task);

/// Throws ConfigError for odd widths, which have no half-sum class.
Split vector_split(std::uint64_t pattern, std::size_t bits);
Split vector_split(const std::vector<int>& bits);
bool in_split(std::uint64_t pattern, std::size_t bits, Split split);

/// Uniform draw from the vectors of `split`, by rejection.
std::uint64_t sample_vector(Rng& rng, std::size_t bits, Split split);

/// L data steps, one delimiter step, then L silent recall steps.
TaskInstance gen_copy(Rng& rng, std::size_t length, const CopyConfig& cfg);

/// L data steps, one delimiter step carrying the normalized repeat count,
/// then R*L + 1 silent recall steps ending with the end marker.
TaskInstance gen_repeat_copy(Rng& rng, std::size_t length, std::size_t reps,
                             const RepeatCopyConfig& cfg);

/// Length (and repeat count) drawn uniformly from the configured ranges.
TaskInstance sample_training_instance(Rng& rng, const TaskConfig& task);
/// Instance `index` of the run seeded with `seed`; independent of all other indices.
TaskInstance sample_training_instance(std::uint64_t seed, std::uint64_t index,
                                      const TaskConfig& task);

/// Writes the NTMTASK v1 text dump.
void write_instance(std::ostream& out, std::string_view task, const TaskInstance& inst);
/// Reads a dump written by write_instance; returns the task name through `task`.
TaskInstance read_instance(std::istream& in, std::string* task = nullptr);

}  // namespace ntm
