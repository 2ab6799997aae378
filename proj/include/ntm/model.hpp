#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ntm/tensor.hpp"

namespace ntm {

/// Width of the location shift kernel; offsets {-1, 0, +1}.
inline constexpr std::size_t kShiftWidth = 3;

/// Initial-weighting logit of location 0 in a freshly initialized model
/// (all other locations start at 0).
inline constexpr double kInitialFocusLogit = 10.0;
/// Value of every initial memory cell in a freshly initialized model.
inline constexpr double kInitialMemoryValue = 1e-2;

struct ModelConfig {
  std::size_t input_channels = 9;
  std::size_t output_channels = 8;
  std::size_t memory_rows = 128;  // N
  std::size_t memory_width = 20;  // M
  std::size_t hidden = 100;       // controller size

  void validate() const;
  bool operator==(const ModelConfig&) const = default;
};

struct ParameterSpec {
  std::string name;
  Shape shape;
};

/// Names and shapes of every learnable array, in storage order.
std::vector<ParameterSpec> parameter_layout(const ModelConfig& cfg);
/// Total number of scalars across parameter_layout(cfg).
std::size_t parameter_count(const ModelConfig& cfg);

struct Parameter {
  std::string name;
  Tensor value;

  bool operator==(const Parameter&) const = default;
};

/// All learnable state of a feedforward-controller NTM with one read head and
/// one write head: controller layer, head projections, output projection and
/// the learned initial memory, weightings (as logits) and read vector.
class NtmModel {
 public:
  /// Zero-initialized parameters.
  explicit NtmModel(ModelConfig cfg);

  /// Uniform fan-in scaled weights, zero biases, uniform initial memory and
  /// both initial weightings focused on location 0.
  static NtmModel random(const ModelConfig& cfg, std::uint64_t seed);

  /// Adopts externally stored arrays. Every name of parameter_layout(cfg) must
  /// appear exactly once with its shape; throws ConfigError naming the
  /// offending parameter otherwise.
  static NtmModel from_parameters(const ModelConfig& cfg, std::vector<Parameter> params);

  const ModelConfig& config() const { return config_; }

  std::span<Parameter> parameters() { return params_; }
  std::span<const Parameter> parameters() const { return params_; }

  Tensor& parameter(std::string_view name);
  const Tensor& parameter(std::string_view name) const;

  std::size_t parameter_count() const;

  bool operator==(const NtmModel&) const = default;

 private:
  ModelConfig config_;
  std::vector<Parameter> params_;
};

}  // namespace ntm
