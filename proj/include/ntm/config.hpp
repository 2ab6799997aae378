#pragma once

#include <filesystem>
#include <string_view>

#include "ntm/model.hpp"
#include "ntm/tasks.hpp"
#include "ntm/trainer.hpp"

namespace ntm {

/// Everything `train` needs: model size, task ranges and optimizer settings.
struct RunConfig {
  ModelConfig model;
  TaskConfig task;
  TrainConfig train;
};

/// "copy" or "repeat" with the default ranges of that task.
TaskConfig default_task(std::string_view name);

/// Parses a JSON run configuration. Every key is optional:
///
///   {
///     "model": {"memory_rows": 128, "memory_width": 20, "hidden": 100},
///     "task":  {"bits": 8, "min_len": 1, "max_len": 20, "split": "train",
///               "min_reps": 1, "max_reps": 10, "rep_normalizer": 10},
///     "train": {"learning_rate": 1e-4, "optimizer": "rmsprop", "decay": 0.95,
///               "epsilon": 1e-4, "momentum": 0, "clip_threshold": 10,
///               "batch_size": 1, "total_instances": 100000,
///               "report_every": 1000, "checkpoint_every": 0, "seed": 1}
///   }
///
/// Model channel counts follow from the task. Unknown keys are rejected.
RunConfig parse_run_config(std::string_view task, std::string_view json_text);
RunConfig load_run_config(std::string_view task, const std::filesystem::path& path);

}  // namespace ntm
