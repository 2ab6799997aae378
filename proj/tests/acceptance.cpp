// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//
//   ntm_acceptance [criteria...]     e.g. `ntm_acceptance 1 3 7`; default all

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "model_check.hpp"
#include "ntm/checkpoint.hpp"
#include "ntm/config.hpp"
#include "ntm/evaluator.hpp"
#include "ntm/format.hpp"
#include "ntm/machine.hpp"
#include "ntm/render.hpp"
#include "ntm/tasks.hpp"
#include "ntm/trainer.hpp"
#include "test_util.hpp"

using namespace ntm;
namespace fs = std::filesystem;
using ntm::testing::random_distribution;
using ntm::testing::random_tensor;
using ntm::testing::total;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// 1. End-to-end gradient of the sequence loss through unroll.
Outcome gradient_correctness() {
  const auto start = Clock::now();
  const ModelConfig cfg{5, 4, 8, 4, 8};  // N=8, M=4, H=8
  const CopyConfig task{4, 1, 2, Split::Train};
  Rng rng(20240601);
  double worst = 0.0;
  for (int point = 0; point < 20; ++point) {
    const NtmModel model = ntm::testing::random_point(cfg, rng);
    const TaskInstance inst = gen_copy(rng, 2, task);  // T = 5
    worst = std::max(worst, ntm::testing::model_grad_check(model, inst, 1e-5));
  }
  const double secs = seconds_since(start);
  return {worst < 1e-4 && secs < 60.0,
          "max relative error " + sci(worst) + " over 20 points (" + format_fixed(secs, 1) + " s)"};
}

// 2. Addressing pipeline invariants under random inputs.
Outcome addressing_invariants() {
  Rng rng(7);
  double worst_norm = 0.0, worst_mass = 0.0, worst_range = 0.0;
  for (int pass = 0; pass < 100000; ++pass) {
    Tape tape;
    const std::size_t n = 1 + rng.uniform_int(0, 63), m = 1 + rng.uniform_int(0, 19);
    Var memory = tape.constant(random_tensor(rng, {n, m}, -5, 5));
    HeadControls c;
    c.key = tape.constant(random_tensor(rng, {m}, -5, 5));
    c.strength = tape.constant(Tensor::scalar(rng.uniform(0, 100)));
    c.gate = tape.constant(Tensor::scalar(rng.uniform01()));
    c.shift = tape.constant(random_distribution(rng, kShiftWidth));
    c.sharpen = tape.constant(Tensor::scalar(rng.uniform(1, 50)));
    const AddressingStages s = address(memory, c, tape.constant(random_distribution(rng, n)));
    for (const Var& w : {s.content, s.gated, s.shifted, s.sharpened}) {
      worst_norm = std::max(worst_norm, std::abs(total(w.value()) - 1.0));
      for (double v : w.value().data())
        worst_range = std::max({worst_range, -v, v - 1.0});
    }
    worst_mass = std::max(worst_mass, std::abs(total(s.shifted.value()) - total(s.gated.value())));
  }
  // Entries may exceed 1 by rounding in the blend and convolution sums only.
  const bool pass = worst_norm < 1e-9 && worst_mass < 1e-12 && worst_range <= 1e-15;
  return {pass, "1e5 passes: max |sum-1| " + sci(worst_norm) + ", max shift mass drift " +
                    sci(worst_mass) + ", max excursion outside [0,1] " + sci(std::max(worst_range, 0.0))};
}

// 3. Bit-sum split.
Outcome split_correctness() {
  int test = 0;
  bool disjoint = true;
  for (std::uint64_t v = 0; v < 256; ++v) {
    const bool in_train = in_split(v, 8, Split::Train), in_test = in_split(v, 8, Split::Test);
    disjoint &= in_train != in_test;
    test += in_test;
    if (in_test != (std::popcount(v) == 4)) disjoint = false;
  }
  Rng rng(3);
  int leaked = 0;
  for (int i = 0; i < 100000; ++i) leaked += in_split(sample_vector(rng, 8, Split::Train), 8, Split::Test);
  return {test == 70 && disjoint && leaked == 0,
          std::to_string(test) + " Test vectors of 256, " + (disjoint ? "disjoint" : "overlapping") +
              ", " + std::to_string(leaked) + " Test vectors in 1e5 Train samples"};
}

// 4. Statistics semantics.
Outcome statistics_semantics() {
  auto pattern = [](std::size_t ones) {
    std::vector<std::uint64_t> e(10000, 0);
    for (std::size_t i = 0; i < ones; ++i) e[(i * 7919) % e.size()] = 1;
    return e;
  };
  auto check = [&](std::size_t ones, double mean, double std, std::string& detail) {
    const auto errors = pattern(ones);
    ErrorAggregate single;
    for (auto e : errors) single.add(e, 8);
    ErrorAggregate merged;
    for (std::size_t part = 0; part < 4; ++part) {
      ErrorAggregate a;
      for (std::size_t i = part * 2500; i < (part + 1) * 2500; ++i) a.add(errors[i], 8);
      merged = merge_stats(a, merged);
    }
    const EvalStats s = single.finalize(), m = merged.finalize();
    detail += std::to_string(ones) + "/10000: mean " + format_fixed(s.mean_bit_errors, 6) +
              " std " + format_fixed(s.std_bit_errors, 6) + "; ";
    return std::abs(s.mean_bit_errors - mean) <= 5e-5 && std::abs(s.std_bit_errors - std) <= 5e-5 &&
           std::abs(m.mean_bit_errors - s.mean_bit_errors) <= 1e-12 &&
           std::abs(m.std_bit_errors - s.std_bit_errors) <= 1e-12 &&
           m.n_sequences == s.n_sequences && m.n_with_errors == s.n_with_errors;
  };
  std::string detail;
  const bool a = check(13, 0.0013, 0.0360, detail);
  const bool b = check(36, 0.0036, 0.0599, detail);
  return {a && b, detail + "4-way merge equals single pass"};
}

// 5. Desk-scale training and length extrapolation.
Outcome desk_training() {
  const auto start = Clock::now();
  const RunConfig cfg = load_run_config("copy", NTM_DESK_CONFIG);
  TrainState state = start_training(cfg.model, cfg.train);
  train_loop(cfg.train, cfg.task, state, {});

  CopyConfig test = std::get<CopyConfig>(cfg.task);
  test.split = Split::Test;
  test.max_len = 10;
  bool pass = cfg.train.total_instances <= 200000;
  std::string detail;
  for (std::size_t len : {1, 2, 3, 4, 5, 10}) {
    const EvalStats s = evaluate(state.model, EvalSpec{test, len, 1, 0}, 1000, 777);
    pass &= s.mean_bit_errors < (len == 10 ? 1.0 : 0.05);
    detail += "L" + std::to_string(len) + "=" + format_fixed(s.mean_bit_errors, 3) + " ";
  }
  const double secs = seconds_since(start);
  pass &= secs < 3600.0;
  return {pass, std::to_string(cfg.train.total_instances) + " instances; Test mean bit errors " +
                    detail + "(" + format_fixed(secs, 0) + " s)"};
}

// 7. Determinism and round-trips.
Outcome determinism() {
  const fs::path dir = fs::temp_directory_path() / ("ntm_acceptance_" + std::to_string(getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
  };
  std::vector<std::string> failures;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  };

  const ModelConfig mc{5, 4, 16, 6, 16};
  const CopyConfig copy{4, 1, 10, Split::Test};
  NtmModel model = NtmModel::random(mc, 5);
  {
    // Perturb away from the structured initial state so every array is exercised.
    Rng rng(5);
    for (Parameter& p : model.parameters())
      for (double& v : p.value.data()) v += rng.uniform(-0.5, 0.5);
  }

  save_checkpoint(model, copy, dir / "a.ckpt");
  const NtmModel loaded = load_model(dir / "a.ckpt");
  bool bits_equal = loaded.parameters().size() == model.parameters().size();
  for (std::size_t p = 0; bits_equal && p < model.parameters().size(); ++p)
    for (std::size_t i = 0; i < model.parameters()[p].value.size(); ++i)
      bits_equal &= std::bit_cast<std::uint64_t>(model.parameters()[p].value[i]) ==
                    std::bit_cast<std::uint64_t>(loaded.parameters()[p].value[i]);
  expect(bits_equal, "checkpoint parameters");
  save_checkpoint(loaded, copy, dir / "b.ckpt");
  expect(slurp(dir / "a.ckpt") == slurp(dir / "b.ckpt"), "checkpoint bytes");

  for (const TaskConfig& task : {TaskConfig{copy}, TaskConfig{RepeatCopyConfig{}}}) {
    std::string first;
    for (int run = 0; run < 2; ++run) {
      std::ostringstream out;
      const EvalSpec spec{task, 7, 3, 0};
      write_instance(out, task_name(task), eval_instance(spec, 7, 0));
      if (run == 0) first = out.str();
      else expect(first == out.str(), std::string("generation ") + std::string(task_name(task)));
    }
  }

  const EvalSpec spec{copy, 6, 1, 0};
  const EvalStats one = evaluate(model, spec, 200, 9, 1);
  expect(one == evaluate(model, spec, 200, 9, 1), "evaluation rerun");
  expect(one == evaluate(model, spec, 200, 9, 4), "evaluation with 4 workers");

  const TaskInstance inst = eval_instance(spec, 9, 0);
  for (const char* sub : {"r1", "r2"}) {
    const Prediction p = predict(model, inst.input);
    render_trace(inst, p.outputs, p.trace, dir / sub);
  }
  for (const auto& entry : fs::directory_iterator(dir / "r1"))
    expect(slurp(entry.path()) == slurp(dir / "r2" / entry.path().filename()),
           "render " + entry.path().filename().string());

  fs::remove_all(dir);
  std::string detail = failures.empty() ? "checkpoint, generation, evaluation (1 vs 4 workers) and "
                                          "rendering reproduce exactly"
                                        : "mismatch:";
  for (const auto& f : failures) detail += " " + f;
  return {failures.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  const std::vector<std::pair<int, std::function<Outcome()>>> criteria = {
      {1, gradient_correctness}, {2, addressing_invariants}, {3, split_correctness},
      {4, statistics_semantics}, {5, desk_training},         {7, determinism},
  };
  int failed = 0;
  for (const auto& [id, run] : criteria) {
    if (!wanted.empty() && !wanted.count(id)) continue;
    Outcome o;
    try {
      o = run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << id << ": " << o.detail << std::endl;
  }
  if (wanted.empty() || wanted.count(6))
    std::cout << "SKIP criterion 6: full-size training is optional and not run here" << std::endl;
  return failed == 0 ? 0 : 1;
}
