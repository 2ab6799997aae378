#include "ntm/machine.hpp"

#include <map>
#include <string>

#include "ntm/error.hpp"

namespace ntm {

using namespace ad;

namespace {

Var linear(Var w, Var b, Var x) { return add(matvec(w, x), b); }

HeadVars bind_head(const std::map<std::string, Var, std::less<>>& by_name,
                   const std::string& head, bool writes) {
  auto get = [&](const std::string& name) { return by_name.at(head + "." + name); };
  HeadVars h;
  h.key_w = get("key.weight");
  h.key_b = get("key.bias");
  h.strength_w = get("strength.weight");
  h.strength_b = get("strength.bias");
  h.gate_w = get("gate.weight");
  h.gate_b = get("gate.bias");
  h.shift_w = get("shift.weight");
  h.shift_b = get("shift.bias");
  h.sharpen_w = get("sharpen.weight");
  h.sharpen_b = get("sharpen.bias");
  if (writes) {
    h.erase_w = get("erase.weight");
    h.erase_b = get("erase.bias");
    h.add_w = get("add.weight");
    h.add_b = get("add.bias");
  }
  return h;
}

HeadControls head_controls(Var hidden, const HeadVars& h, bool writes) {
  HeadControls c;
  c.key = linear(h.key_w, h.key_b, hidden);
  c.strength = softplus(linear(h.strength_w, h.strength_b, hidden));
  c.gate = sigmoid(linear(h.gate_w, h.gate_b, hidden));
  c.shift = softmax(linear(h.shift_w, h.shift_b, hidden));
  c.sharpen = oneplus(linear(h.sharpen_w, h.sharpen_b, hidden));
  if (writes) {
    c.erase = sigmoid(linear(h.erase_w, h.erase_b, hidden));
    c.add = linear(h.add_w, h.add_b, hidden);
  }
  return c;
}

}  // namespace

ModelVars bind_model(Tape& tape, const NtmModel& model, bool trainable) {
  ModelVars vars;
  std::map<std::string, Var, std::less<>> by_name;
  for (const Parameter& p : model.parameters()) {
    Var v = trainable ? tape.leaf(p.value) : tape.constant(p.value);
    vars.all.push_back(v);
    by_name.emplace(p.name, v);
  }
  vars.controller_w = by_name.at("controller.weight");
  vars.controller_b = by_name.at("controller.bias");
  vars.read = bind_head(by_name, "read", false);
  vars.write = bind_head(by_name, "write", true);
  vars.output_w = by_name.at("output.weight");
  vars.output_b = by_name.at("output.bias");
  vars.init_memory = by_name.at("init.memory");
  vars.init_read_logits = by_name.at("init.read_logits");
  vars.init_write_logits = by_name.at("init.write_logits");
  vars.init_read_vector = by_name.at("init.read_vector");
  return vars;
}

std::vector<Tensor> collect_gradients(const ModelVars& vars) {
  std::vector<Tensor> grads;
  grads.reserve(vars.all.size());
  for (const Var& v : vars.all) grads.push_back(v.grad());
  return grads;
}

ControllerOutput controller_forward(Var x, Var read_prev, const ModelVars& vars) {
  ControllerOutput out;
  out.hidden = ad::tanh(linear(vars.controller_w, vars.controller_b, concat(x, read_prev)));
  out.read = head_controls(out.hidden, vars.read, false);
  out.write = head_controls(out.hidden, vars.write, true);
  out.logits = linear(vars.output_w, vars.output_b, out.hidden);
  return out;
}

Var content_address(Var memory, Var key, Var strength) {
  return softmax(mul(strength, row_cosine_similarity(memory, key)));
}

Var interpolate(Var content, Var previous, Var gate) {
  return add(mul(gate, content), mul(one_minus(gate), previous));
}

Var shift(Var weighting, Var shift_dist) { return circular_convolve(weighting, shift_dist); }

Var sharpen(Var weighting, Var gamma) {
  Var powered = pow_scalar(weighting, gamma);
  Var total = sum(powered);
  if (!(total.value().item() > 0.0))
    throw ContractError("sharpen: weighting has no positive mass");
  return div(powered, total);
}

AddressingStages address(Var memory, const HeadControls& controls, Var previous) {
  AddressingStages s;
  s.content = content_address(memory, controls.key, controls.strength);
  s.gated = interpolate(s.content, previous, controls.gate);
  s.shifted = shift(s.gated, controls.shift);
  s.sharpened = sharpen(s.shifted, controls.sharpen);
  return s;
}

Var read_memory(Var memory, Var weighting) { return matvec_transposed(memory, weighting); }

Var write_memory(Var memory, Var weighting, Var erase, Var add_vec) {
  Var erased = sub(memory, mul(memory, outer(weighting, erase)));
  return add(erased, outer(weighting, add_vec));
}

NtmState initial_state(const ModelVars& vars) {
  return {vars.init_memory, softmax(vars.init_read_logits), softmax(vars.init_write_logits),
          vars.init_read_vector};
}

StepOutput ntm_step(const NtmState& state, Var x, const ModelVars& vars) {
  StepOutput out;
  out.controls = controller_forward(x, state.read_vector, vars);
  const ControllerOutput& c = out.controls;

  Var w_write = address(state.memory, c.write, state.write_weighting).sharpened;
  Var memory = write_memory(state.memory, w_write, c.write.erase, c.write.add);
  Var w_read = address(memory, c.read, state.read_weighting).sharpened;
  Var read = read_memory(memory, w_read);

  out.state = {memory, w_read, w_write, read};
  out.output = sigmoid(c.logits);
  return out;
}

UnrollResult unroll(Tape& tape, const ModelVars& vars, const Tensor& input) {
  if (input.rank() != 2) throw DimensionError("unroll: input must be [T x channels]");
  const std::size_t steps = input.rows();
  UnrollResult result;
  result.trace.reserve(steps);
  std::vector<Var> outputs;
  outputs.reserve(steps);

  NtmState state = initial_state(vars);
  for (std::size_t t = 0; t < steps; ++t) {
    const auto row = input.row(t);
    Var x = tape.constant(Tensor::vector(std::vector<double>(row.begin(), row.end())));
    StepOutput step = ntm_step(state, x, vars);
    state = step.state;
    outputs.push_back(step.output);
    result.trace.push_back({state.read_weighting.value(), state.write_weighting.value(),
                            step.output.value()});
  }
  result.outputs = stack(outputs);
  return result;
}

Prediction predict(const NtmModel& model, const Tensor& input) {
  Tape tape;
  const ModelVars vars = bind_model(tape, model, false);
  UnrollResult r = unroll(tape, vars, input);
  return {r.outputs.value(), std::move(r.trace)};
}

}  // namespace ntm
