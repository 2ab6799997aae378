#include "ntm/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "ntm/error.hpp"

namespace ntm::ad {
namespace {

double evaluate(const MultiScalarFn& f, const std::vector<Tensor>& inputs) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(inputs.size());
  for (const Tensor& t : inputs) vars.push_back(tape.constant(t));
  return f(tape, vars).value().item();
}

}  // namespace

GradCheckReport grad_check_report(const MultiScalarFn& f, const std::vector<Tensor>& inputs,
                                  double h) {
  if (!(h > 0.0)) throw ContractError("grad_check: step must be positive");

  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    vars.reserve(inputs.size());
    for (const Tensor& t : inputs) vars.push_back(tape.leaf(t));
    tape.backward(f(tape, vars));
    for (const Var& v : vars) analytic.push_back(v.grad());
  }

  GradCheckReport report;
  std::vector<Tensor> probe = inputs;
  for (std::size_t p = 0; p < probe.size(); ++p) {
    for (std::size_t i = 0; i < probe[p].size(); ++i) {
      const double orig = probe[p][i];
      probe[p][i] = orig + h;
      const double up = evaluate(f, probe);
      probe[p][i] = orig - h;
      const double down = evaluate(f, probe);
      probe[p][i] = orig;

      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[p][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double err = std::abs(a - numeric) / denom;
      if (err > report.max_relative_error) report = {err, p, i, a, numeric};
    }
  }
  return report;
}

double grad_check(const MultiScalarFn& f, const std::vector<Tensor>& inputs, double h) {
  return grad_check_report(f, inputs, h).max_relative_error;
}

double grad_check(const ScalarFn& f, const Tensor& x, double h) {
  return grad_check(
      [&](Tape& tape, std::span<const Var> vars) { return f(tape, vars[0]); }, {x}, h);
}

}  // namespace ntm::ad
