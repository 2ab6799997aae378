#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "ntm/error.hpp"
#include "ntm/machine.hpp"
#include "ntm/tasks.hpp"

namespace ntm {

/// Outputs are clamped to [kOutputClamp, 1 - kOutputClamp] before the log.
inline constexpr double kOutputClamp = 1e-12;

/// Binary cross-entropy in nats, summed over masked steps and all channels.
Var sequence_loss(Var outputs, const Tensor& target, const Mask& mask);
double sequence_loss_value(const Tensor& outputs, const Tensor& target, const Mask& mask);
double nats_to_bits(double nats);

double global_norm(std::span<const Tensor> grads);
/// Rescales all gradients by threshold/norm when the global L2 norm exceeds
/// `threshold`. Returns the norm before clipping.
double clip_gradients(std::span<Tensor> grads, double threshold);

enum class OptimizerKind { RmsProp, SgdMomentum };

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::RmsProp;
  double decay = 0.95;    // RMSProp squared-gradient average
  double epsilon = 1e-4;  // RMSProp: step = g / sqrt(avg + epsilon)
  double momentum = 0.0;  // both kinds
};

/// Per-parameter slots, aligned with NtmModel::parameters(). Empty until the
/// first update.
struct OptimizerState {
  std::vector<Tensor> square_avg;
  std::vector<Tensor> velocity;
  std::uint64_t steps = 0;

  bool operator==(const OptimizerState&) const = default;
};

void apply_update(NtmModel& model, std::span<const Tensor> grads, double learning_rate,
                  const OptimizerConfig& cfg, OptimizerState& state);

struct TrainConfig {
  double learning_rate = 1e-4;
  OptimizerConfig optimizer;
  /// Global gradient norm cap; infinity disables clipping.
  double clip_threshold = 10.0;
  std::size_t batch_size = 1;
  std::size_t total_instances = 100000;
  std::size_t report_every = 1000;
  std::size_t checkpoint_every = 0;  // 0: never
  std::uint64_t seed = 1;

  void validate() const;
};

/// Raised when a training step produces a non-finite loss or gradient.
class TrainingError : public Error {
 public:
  using Error::Error;
};

struct StepResult {
  double loss = 0.0;  // mean nats per sequence
  std::vector<double> sequence_losses;
  double grad_norm = 0.0;
};

/// Gradient of the mean sequence loss of `batch` w.r.t. every parameter.
struct BatchGradient {
  double loss = 0.0;
  std::vector<double> sequence_losses;
  std::vector<Tensor> grads;
};
BatchGradient batch_gradient(const NtmModel& model, std::span<const TaskInstance> batch);

/// Forward-only mean sequence loss in nats.
double batch_loss(const NtmModel& model, std::span<const TaskInstance> batch);

/// BPTT over each instance, clip, then one optimizer update.
StepResult train_step(NtmModel& model, std::span<const TaskInstance> batch,
                      const TrainConfig& cfg, OptimizerState& opt, std::uint64_t step_index = 0);

struct CurvePoint {
  std::uint64_t instances_seen = 0;
  double loss_bits = 0.0;  // mean bits per sequence over the report window

  bool operator==(const CurvePoint&) const = default;
};

/// Everything needed to continue a run exactly where it stopped.
struct TrainState {
  NtmModel model;
  OptimizerState optimizer;
  std::uint64_t instances_seen = 0;
  double window_bits = 0.0;
  std::uint64_t window_count = 0;
  std::vector<CurvePoint> curve;
};

TrainState start_training(const ModelConfig& model_cfg, const TrainConfig& cfg);

struct TrainHooks {
  std::function<void(const TrainState&)> checkpoint;
  std::function<void(const CurvePoint&)> report;
};

/// Trains until state.instances_seen reaches cfg.total_instances. Instance i
/// of the run is drawn from stream (cfg.seed, i), so a resumed run sees the
/// same data as an uninterrupted one.
void train_loop(const TrainConfig& cfg, const TaskConfig& task, TrainState& state,
                const TrainHooks& hooks = {});

}  // namespace ntm
