#include "ntm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "ntm/error.hpp"

namespace ntm {

using namespace ad;

Var sequence_loss(Var outputs, const Tensor& target, const Mask& mask) {
  const Tensor& y = outputs.value();
  if (y.shape() != target.shape())
    throw DimensionError("sequence_loss: outputs " + shape_string(y.shape()) + " vs target " +
                         shape_string(target.shape()));
  if (mask.size() != y.rows()) throw DimensionError("sequence_loss: mask length mismatch");

  Tape& tape = outputs.tape();
  // Per-entry weights fold the mask and the target into the two log terms.
  Tensor on(y.shape()), off(y.shape());
  for (std::size_t t = 0; t < y.rows(); ++t) {
    if (!mask[t]) continue;
    for (std::size_t c = 0; c < y.cols(); ++c) {
      on.at(t, c) = -target.at(t, c);
      off.at(t, c) = -(1.0 - target.at(t, c));
    }
  }
  Var clamped = clamp(outputs, kOutputClamp, 1.0 - kOutputClamp);
  Var hit = mul(tape.constant(std::move(on)), ad::log(clamped));
  Var miss = mul(tape.constant(std::move(off)), ad::log(one_minus(clamped)));
  return sum(add(hit, miss));
}

double sequence_loss_value(const Tensor& outputs, const Tensor& target, const Mask& mask) {
  Tape tape;
  return sequence_loss(tape.constant(outputs), target, mask).value().item();
}

double nats_to_bits(double nats) { return nats / std::numbers::ln2; }

double global_norm(std::span<const Tensor> grads) {
  double s = 0.0;
  for (const Tensor& g : grads)
    for (double v : g.data()) s += v * v;
  return std::sqrt(s);
}

double clip_gradients(std::span<Tensor> grads, double threshold) {
  if (!(threshold > 0.0)) throw ContractError("clip threshold must be positive");
  const double norm = global_norm(grads);
  if (norm > threshold) {
    const double scale = threshold / norm;
    for (Tensor& g : grads)
      for (double& v : g.data()) v *= scale;
  }
  return norm;
}

void apply_update(NtmModel& model, std::span<const Tensor> grads, double learning_rate,
                  const OptimizerConfig& cfg, OptimizerState& state) {
  auto params = model.parameters();
  if (grads.size() != params.size())
    throw ContractError("apply_update: one gradient per parameter required");
  const bool rms = cfg.kind == OptimizerKind::RmsProp;
  auto init = [&](std::vector<Tensor>& slots) {
    if (!slots.empty()) return;
    for (const Parameter& p : params) slots.emplace_back(p.value.shape());
  };
  if (rms) init(state.square_avg);
  if (!rms || cfg.momentum != 0.0) init(state.velocity);

  for (std::size_t p = 0; p < params.size(); ++p) {
    std::span<double> theta = params[p].value.data();
    std::span<const double> g = grads[p].data();
    for (std::size_t i = 0; i < theta.size(); ++i) {
      double step = learning_rate * g[i];
      if (rms) {
        double& avg = state.square_avg[p][i];
        avg = cfg.decay * avg + (1.0 - cfg.decay) * g[i] * g[i];
        step /= std::sqrt(avg + cfg.epsilon);
      }
      if (!state.velocity.empty()) {
        double& v = state.velocity[p][i];
        v = cfg.momentum * v - step;
        theta[i] += v;
      } else {
        theta[i] -= step;
      }
    }
  }
  ++state.steps;
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(clip_threshold > 0.0)) throw ConfigError("clip_threshold must be positive");
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (total_instances == 0) throw ConfigError("total_instances must be positive");
  if (report_every == 0) throw ConfigError("report_every must be positive");
  if (optimizer.kind == OptimizerKind::RmsProp &&
      !(optimizer.decay >= 0.0 && optimizer.decay < 1.0 && optimizer.epsilon > 0.0))
    throw ConfigError("rmsprop needs decay in [0, 1) and epsilon > 0");
}

BatchGradient batch_gradient(const NtmModel& model, std::span<const TaskInstance> batch) {
  if (batch.empty()) throw ContractError("empty training batch");
  BatchGradient out;
  const double scale = 1.0 / static_cast<double>(batch.size());
  for (const TaskInstance& inst : batch) {
    Tape tape;
    const ModelVars vars = bind_model(tape, model, true);
    UnrollResult run = unroll(tape, vars, inst.input);
    Var loss = sequence_loss(run.outputs, inst.target, inst.mask);
    tape.backward(loss);
    const double value = loss.value().item();
    out.sequence_losses.push_back(value);
    out.loss += value * scale;
    std::vector<Tensor> grads = collect_gradients(vars);
    if (out.grads.empty()) {
      out.grads.reserve(grads.size());
      for (const Tensor& g : grads) out.grads.emplace_back(g.shape());
    }
    for (std::size_t p = 0; p < grads.size(); ++p)
      for (std::size_t i = 0; i < grads[p].size(); ++i) out.grads[p][i] += scale * grads[p][i];
  }
  return out;
}

double batch_loss(const NtmModel& model, std::span<const TaskInstance> batch) {
  if (batch.empty()) throw ContractError("empty batch");
  const double scale = 1.0 / static_cast<double>(batch.size());
  double total = 0.0;
  for (const TaskInstance& inst : batch) {
    Tape tape;
    const ModelVars vars = bind_model(tape, model, false);
    UnrollResult run = unroll(tape, vars, inst.input);
    total += sequence_loss(run.outputs, inst.target, inst.mask).value().item() * scale;
  }
  return total;
}

StepResult train_step(NtmModel& model, std::span<const TaskInstance> batch,
                      const TrainConfig& cfg, OptimizerState& opt, std::uint64_t step_index) {
  auto failure = [&](const std::string& what) {
    std::string streams;
    for (const TaskInstance& inst : batch)
      streams += (streams.empty() ? "" : ",") + std::to_string(inst.stream);
    return TrainingError(what + " at step " + std::to_string(step_index) + " (seed " +
                         std::to_string(cfg.seed) + ", instance streams " + streams + ")");
  };
  BatchGradient bg;
  try {
    bg = batch_gradient(model, batch);
  } catch (const DomainError& e) {
    // A NaN reaching a guarded op (log, pow) is the same failure as a NaN loss.
    throw failure(std::string("non-finite value (") + e.what() + ")");
  }
  const double norm = global_norm(bg.grads);
  if (!std::isfinite(bg.loss) || !std::isfinite(norm)) throw failure("non-finite loss");
  if (std::isfinite(cfg.clip_threshold)) clip_gradients(bg.grads, cfg.clip_threshold);
  apply_update(model, bg.grads, cfg.learning_rate, cfg.optimizer, opt);
  return {bg.loss, std::move(bg.sequence_losses), norm};
}

TrainState start_training(const ModelConfig& model_cfg, const TrainConfig& cfg) {
  return TrainState{NtmModel::random(model_cfg, cfg.seed), {}, 0, 0.0, 0, {}};
}

void train_loop(const TrainConfig& cfg, const TaskConfig& task, TrainState& state,
                const TrainHooks& hooks) {
  cfg.validate();
  const ModelConfig& mc = state.model.config();
  if (mc.input_channels != input_channels(task) || mc.output_channels != target_channels(task))
    throw ConfigError("model channel counts do not match the task");

  std::vector<TaskInstance> batch;
  while (state.instances_seen < cfg.total_instances) {
    const std::uint64_t first = state.instances_seen;
    const std::size_t count = static_cast<std::size_t>(
        std::min<std::uint64_t>(cfg.batch_size, cfg.total_instances - first));
    batch.clear();
    for (std::size_t b = 0; b < count; ++b)
      batch.push_back(sample_training_instance(cfg.seed, first + b, task));

    const StepResult r = train_step(state.model, batch, cfg, state.optimizer, first / cfg.batch_size);
    for (std::size_t b = 0; b < count; ++b) {
      state.window_bits += nats_to_bits(r.sequence_losses[b]);
      ++state.window_count;
      ++state.instances_seen;
      if (state.instances_seen % cfg.report_every == 0) {
        CurvePoint p{state.instances_seen,
                     state.window_bits / static_cast<double>(state.window_count)};
        state.curve.push_back(p);
        state.window_bits = 0.0;
        state.window_count = 0;
        if (hooks.report) hooks.report(p);
      }
    }
    if (cfg.checkpoint_every && hooks.checkpoint &&
        first / cfg.checkpoint_every != state.instances_seen / cfg.checkpoint_every)
      hooks.checkpoint(state);
  }
}

}  // namespace ntm
