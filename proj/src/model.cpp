#include "ntm/model.hpp"

#include <algorithm>
#include <cmath>

#include "ntm/error.hpp"
#include "ntm/rng.hpp"

namespace ntm {
namespace {

void add_linear(std::vector<ParameterSpec>& out, const std::string& prefix, std::size_t rows,
                std::size_t cols) {
  out.push_back({prefix + ".weight", {rows, cols}});
  out.push_back({prefix + ".bias", {rows}});
}

void add_head(std::vector<ParameterSpec>& out, const std::string& head, std::size_t width,
              std::size_t hidden, bool writes) {
  add_linear(out, head + ".key", width, hidden);
  add_linear(out, head + ".strength", 1, hidden);
  add_linear(out, head + ".gate", 1, hidden);
  add_linear(out, head + ".shift", kShiftWidth, hidden);
  add_linear(out, head + ".sharpen", 1, hidden);
  if (writes) {
    add_linear(out, head + ".erase", width, hidden);
    add_linear(out, head + ".add", width, hidden);
  }
}

}  // namespace

void ModelConfig::validate() const {
  if (input_channels == 0 || output_channels == 0 || memory_rows == 0 || memory_width == 0 ||
      hidden == 0)
    throw ConfigError("model dimensions must all be positive");
}

std::vector<ParameterSpec> parameter_layout(const ModelConfig& cfg) {
  cfg.validate();
  const std::size_t n = cfg.memory_rows, m = cfg.memory_width, h = cfg.hidden;
  std::vector<ParameterSpec> out;
  add_linear(out, "controller", h, cfg.input_channels + m);
  add_head(out, "read", m, h, false);
  add_head(out, "write", m, h, true);
  add_linear(out, "output", cfg.output_channels, h);
  out.push_back({"init.memory", {n, m}});
  out.push_back({"init.read_logits", {n}});
  out.push_back({"init.write_logits", {n}});
  out.push_back({"init.read_vector", {m}});
  return out;
}

std::size_t parameter_count(const ModelConfig& cfg) {
  std::size_t total = 0;
  for (const auto& p : parameter_layout(cfg)) total += element_count(p.shape);
  return total;
}

NtmModel::NtmModel(ModelConfig cfg) : config_(cfg) {
  for (auto& spec : parameter_layout(config_))
    params_.push_back({std::move(spec.name), Tensor(std::move(spec.shape))});
}

NtmModel NtmModel::random(const ModelConfig& cfg, std::uint64_t seed) {
  NtmModel model(cfg);
  Rng rng(seed, 0);
  for (Parameter& p : model.params_) {
    if (p.name.ends_with(".weight")) {
      const double limit = 1.0 / std::sqrt(static_cast<double>(p.value.cols()));
      for (double& v : p.value.data()) v = rng.uniform(-limit, limit);
    }
  }
  // Both heads start focused on location 0 over a memory whose rows are all
  // alike, so content lookups cannot single out a row before anything is written.
  model.parameter("init.memory").fill(kInitialMemoryValue);
  model.parameter("init.read_logits")[0] = kInitialFocusLogit;
  model.parameter("init.write_logits")[0] = kInitialFocusLogit;
  for (double& v : model.parameter("init.read_vector").data()) v = rng.uniform(-0.1, 0.1);
  return model;
}

NtmModel NtmModel::from_parameters(const ModelConfig& cfg, std::vector<Parameter> params) {
  NtmModel model(cfg);
  for (const Parameter& p : params)
    if (std::ranges::count(params, p.name, &Parameter::name) != 1 ||
        std::ranges::find(model.params_, p.name, &Parameter::name) == model.params_.end())
      throw ConfigError("unexpected or repeated parameter '" + p.name + "'");
  for (Parameter& slot : model.params_) {
    auto it = std::ranges::find(params, slot.name, &Parameter::name);
    if (it == params.end()) throw ConfigError("missing parameter '" + slot.name + "'");
    if (it->value.shape() != slot.value.shape())
      throw ConfigError("parameter '" + slot.name + "' has shape " +
                        shape_string(it->value.shape()) + ", expected " +
                        shape_string(slot.value.shape()));
    slot.value = std::move(it->value);
  }
  return model;
}

Tensor& NtmModel::parameter(std::string_view name) {
  auto it = std::ranges::find(params_, name, &Parameter::name);
  if (it == params_.end()) throw ContractError("no parameter named '" + std::string(name) + "'");
  return it->value;
}

const Tensor& NtmModel::parameter(std::string_view name) const {
  return const_cast<NtmModel*>(this)->parameter(name);
}

std::size_t NtmModel::parameter_count() const {
  std::size_t total = 0;
  for (const Parameter& p : params_) total += p.value.size();
  return total;
}

}  // namespace ntm
