#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>

#include "ntm/model.hpp"
#include "ntm/tasks.hpp"

namespace ntm {

/// Bit-error statistics over a set of sequences. std is the population
/// standard deviation.
struct EvalStats {
  std::uint64_t n_sequences = 0;
  std::uint64_t n_with_errors = 0;
  std::uint64_t max_bit_error = 0;
  double mean_bit_errors = 0.0;
  double std_bit_errors = 0.0;
  std::uint64_t n_global_errors = 0;
  std::uint64_t total_bit_errors = 0;

  bool operator==(const EvalStats&) const = default;
};

/// Mergeable running sums. All fields are integers, so merging is exact and
/// independent of order.
struct ErrorAggregate {
  std::uint64_t count = 0;
  std::uint64_t with_errors = 0;
  std::uint64_t sum = 0;
  std::uint64_t sum_sq = 0;
  std::uint64_t max = 0;
  std::uint64_t global = 0;

  /// Records one sequence; it counts as a global error when errors > global_threshold.
  void add(std::uint64_t errors, std::uint64_t global_threshold);
  EvalStats finalize() const;

  bool operator==(const ErrorAggregate&) const = default;
};

ErrorAggregate merge_stats(const ErrorAggregate& a, const ErrorAggregate& b);

/// Masked positions where (output >= 0.5) != (target >= 0.5).
std::uint64_t bit_errors(const Tensor& outputs, const Tensor& target, const Mask& mask);

/// Sequences whose error count exceeds one vector's worth of bits.
std::uint64_t global_errors(std::span<const std::uint64_t> per_sequence, std::size_t bits_per_vector);

struct EvalSpec {
  TaskConfig task;  // copy evaluation should use Split::Test
  std::size_t length = 10;
  std::size_t reps = 1;
  /// Global-error threshold; 0 means the task's bits per vector.
  std::size_t global_threshold = 0;
};

/// Instance i is drawn from stream (seed, i) regardless of `workers`.
TaskInstance eval_instance(const EvalSpec& spec, std::uint64_t seed, std::uint64_t index);

/// Unrolls `n` instances against a read-only model on `workers` threads.
EvalStats evaluate(const NtmModel& model, const EvalSpec& spec, std::size_t n,
                   std::uint64_t seed, std::size_t workers = 1);

/// Stats CSV: `task,length,reps,n,n_err,max_err,mean,std,n_global`.
void write_stats_header(std::ostream& out);
void write_stats_row(std::ostream& out, std::string_view task, std::size_t length,
                     std::size_t reps, const EvalStats& stats);

}  // namespace ntm
