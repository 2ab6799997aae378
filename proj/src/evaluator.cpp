#include "ntm/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <ostream>
#include <thread>
#include <vector>

#include "ntm/error.hpp"
#include "ntm/format.hpp"
#include "ntm/machine.hpp"

namespace ntm {

void ErrorAggregate::add(std::uint64_t errors, std::uint64_t global_threshold) {
  ++count;
  with_errors += errors > 0;
  sum += errors;
  sum_sq += errors * errors;
  max = std::max(max, errors);
  global += errors > global_threshold;
}

EvalStats ErrorAggregate::finalize() const {
  EvalStats s;
  s.n_sequences = count;
  s.n_with_errors = with_errors;
  s.max_bit_error = max;
  s.n_global_errors = global;
  s.total_bit_errors = sum;
  if (count == 0) return s;
  const auto n = static_cast<long double>(count);
  const auto total = static_cast<long double>(sum);
  // n^2 var = n * sum_sq - sum^2, exact in integers before the division.
  const long double spread = n * static_cast<long double>(sum_sq) - total * total;
  s.mean_bit_errors = static_cast<double>(total / n);
  s.std_bit_errors = static_cast<double>(std::sqrt(std::max(spread, 0.0L)) / n);
  return s;
}

ErrorAggregate merge_stats(const ErrorAggregate& a, const ErrorAggregate& b) {
  return {a.count + b.count,         a.with_errors + b.with_errors, a.sum + b.sum,
          a.sum_sq + b.sum_sq,       std::max(a.max, b.max),        a.global + b.global};
}

std::uint64_t bit_errors(const Tensor& outputs, const Tensor& target, const Mask& mask) {
  if (outputs.shape() != target.shape())
    throw DimensionError("bit_errors: outputs " + shape_string(outputs.shape()) +
                         " vs target " + shape_string(target.shape()));
  if (mask.size() != outputs.rows()) throw DimensionError("bit_errors: mask length mismatch");
  std::uint64_t errors = 0;
  for (std::size_t t = 0; t < outputs.rows(); ++t) {
    if (!mask[t]) continue;
    for (std::size_t c = 0; c < outputs.cols(); ++c)
      errors += (outputs.at(t, c) >= 0.5) != (target.at(t, c) >= 0.5);
  }
  return errors;
}

std::uint64_t global_errors(std::span<const std::uint64_t> per_sequence,
                            std::size_t bits_per_vector) {
  if (bits_per_vector == 0) throw ContractError("bits_per_vector must be at least 1");
  return static_cast<std::uint64_t>(
      std::ranges::count_if(per_sequence, [&](std::uint64_t e) { return e > bits_per_vector; }));
}

TaskInstance eval_instance(const EvalSpec& spec, std::uint64_t seed, std::uint64_t index) {
  Rng rng(seed, index);
  TaskInstance inst = std::visit(
      [&](const auto& cfg) {
        if constexpr (std::is_same_v<std::decay_t<decltype(cfg)>, CopyConfig>)
          return gen_copy(rng, spec.length, cfg);
        else
          return gen_repeat_copy(rng, spec.length, spec.reps, cfg);
      },
      spec.task);
  inst.stream = index;
  return inst;
}

EvalStats evaluate(const NtmModel& model, const EvalSpec& spec, std::size_t n,
                   std::uint64_t seed, std::size_t workers) {
  if (n == 0) throw ContractError("evaluate needs at least one instance");
  const ModelConfig& mc = model.config();
  if (mc.input_channels != input_channels(spec.task) ||
      mc.output_channels != target_channels(spec.task))
    throw ConfigError("model channel counts do not match the evaluated task");
  const std::uint64_t threshold =
      spec.global_threshold ? spec.global_threshold : data_bits(spec.task);
  workers = std::clamp<std::size_t>(workers, 1, n);

  std::vector<ErrorAggregate> partial(workers);
  std::vector<std::exception_ptr> failures(workers);
  // Worker w takes the contiguous index block [n*w/W, n*(w+1)/W).
  auto run = [&](std::size_t w) {
    try {
      for (std::size_t i = n * w / workers; i < n * (w + 1) / workers; ++i) {
        const TaskInstance inst = eval_instance(spec, seed, i);
        const Prediction p = predict(model, inst.input);
        partial[w].add(bit_errors(p.outputs, inst.target, inst.mask), threshold);
      }
    } catch (...) {
      failures[w] = std::current_exception();
    }
  };

  if (workers == 1) {
    run(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(run, w);
  }
  for (const auto& f : failures)
    if (f) std::rethrow_exception(f);

  ErrorAggregate total;
  for (const ErrorAggregate& a : partial) total = merge_stats(total, a);
  return total.finalize();
}

void write_stats_header(std::ostream& out) {
  out << "task,length,reps,n,n_err,max_err,mean,std,n_global\n";
}

void write_stats_row(std::ostream& out, std::string_view task, std::size_t length,
                     std::size_t reps, const EvalStats& s) {
  out << task << ',' << length << ',' << reps << ',' << s.n_sequences << ',' << s.n_with_errors
      << ',' << s.max_bit_error << ',' << format_fixed(s.mean_bit_errors, 6) << ','
      << format_fixed(s.std_bit_errors, 6) << ',' << s.n_global_errors << '\n';
}

}  // namespace ntm
