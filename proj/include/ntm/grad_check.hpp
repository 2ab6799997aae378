#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "ntm/tape.hpp"

namespace ntm::ad {

/// Builds a scalar loss on `tape` from leaves bound to the given inputs.
using MultiScalarFn = std::function<Var(Tape& tape, std::span<const Var> inputs)>;
using ScalarFn = std::function<Var(Tape& tape, Var input)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_input = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Compares reverse-mode gradients of `f` with central differences
/// (f(x+h) - f(x-h)) / 2h, entry by entry. The relative error of an entry is
/// |a - n| / max(|a|, |n|, 1e-8).
GradCheckReport grad_check_report(const MultiScalarFn& f, const std::vector<Tensor>& inputs,
                                  double h);

double grad_check(const MultiScalarFn& f, const std::vector<Tensor>& inputs, double h);
double grad_check(const ScalarFn& f, const Tensor& x, double h);

}  // namespace ntm::ad
