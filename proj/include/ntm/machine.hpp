#pragma once

#include <vector>

#include "ntm/model.hpp"
#include "ntm/ops.hpp"
#include "ntm/tape.hpp"

namespace ntm {

using ad::Tape;
using ad::Var;

struct HeadVars {
  Var key_w, key_b;
  Var strength_w, strength_b;
  Var gate_w, gate_b;
  Var shift_w, shift_b;
  Var sharpen_w, sharpen_b;
  Var erase_w, erase_b;  // write head only
  Var add_w, add_b;      // write head only
};

/// NtmModel parameters bound to a tape, one node per parameter array.
struct ModelVars {
  Var controller_w, controller_b;
  HeadVars read, write;
  Var output_w, output_b;
  Var init_memory, init_read_logits, init_write_logits, init_read_vector;
  /// Every bound parameter in NtmModel::parameters() order.
  std::vector<Var> all;
};

/// Binds the model to `tape` as leaves (trainable) or constants.
ModelVars bind_model(Tape& tape, const NtmModel& model, bool trainable = true);
/// Gradients of the bound parameters, in NtmModel::parameters() order.
std::vector<Tensor> collect_gradients(const ModelVars& vars);

/// Addressing parameters emitted by the controller for one head and step.
struct HeadControls {
  Var key;       // [M], unconstrained
  Var strength;  // beta >= 0, softplus
  Var gate;      // g in (0, 1), sigmoid
  Var shift;     // distribution over offsets {-1, 0, +1}, softmax
  Var sharpen;   // gamma > 1, oneplus
  Var erase;     // [M] in (0, 1), sigmoid; write head only
  Var add;       // [M], unconstrained; write head only
};

struct ControllerOutput {
  Var hidden;
  HeadControls read;
  HeadControls write;
  Var logits;  // [output_channels]
};

/// hidden = tanh(W [x ; r_prev] + b), then range-enforcing projections.
ControllerOutput controller_forward(Var x, Var read_prev, const ModelVars& vars);

/// softmax_i(beta * cos(key, memory[i]))
Var content_address(Var memory, Var key, Var strength);
/// g * content + (1 - g) * previous
Var interpolate(Var content, Var previous, Var gate);
/// Circular convolution with the shift distribution.
Var shift(Var weighting, Var shift_dist);
/// w^gamma / sum(w^gamma)
Var sharpen(Var weighting, Var gamma);

struct AddressingStages {
  Var content, gated, shifted, sharpened;
};

/// content -> interpolate -> shift -> sharpen.
AddressingStages address(Var memory, const HeadControls& controls, Var previous);

/// sum_i w[i] * memory[i]
Var read_memory(Var memory, Var weighting);
/// memory[i] * (1 - w[i] e) + w[i] a
Var write_memory(Var memory, Var weighting, Var erase, Var add);

struct NtmState {
  Var memory;           // [N x M]
  Var read_weighting;   // [N]
  Var write_weighting;  // [N]
  Var read_vector;      // [M]
};

/// The learned initial state; weightings are softmaxes of learned logits.
NtmState initial_state(const ModelVars& vars);

struct StepOutput {
  NtmState state;
  Var output;  // sigmoid(logits)
  ControllerOutput controls;
};

/// One machine step: controller, then write, then read. The output comes from
/// the controller's hidden layer, so it sees the previous step's read.
StepOutput ntm_step(const NtmState& state, Var x, const ModelVars& vars);

struct TraceStep {
  Tensor read_weighting;
  Tensor write_weighting;
  Tensor output;
};
using StepTrace = std::vector<TraceStep>;

struct UnrollResult {
  Var outputs;  // [T x output_channels]
  StepTrace trace;
};

/// Runs ntm_step over every row of `input` from the initial state.
UnrollResult unroll(Tape& tape, const ModelVars& vars, const Tensor& input);

struct Prediction {
  Tensor outputs;
  StepTrace trace;
};

/// Gradient-free forward pass on a private tape.
Prediction predict(const NtmModel& model, const Tensor& input);

}  // namespace ntm
