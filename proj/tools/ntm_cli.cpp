// ntm: generate task instances, train, evaluate and render Neural Turing
// Machines on the copy and repeat-copy tasks.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "ntm/checkpoint.hpp"
#include "ntm/config.hpp"
#include "ntm/error.hpp"
#include "ntm/evaluator.hpp"
#include "ntm/format.hpp"
#include "ntm/machine.hpp"
#include "ntm/render.hpp"
#include "ntm/tasks.hpp"
#include "ntm/trainer.hpp"

namespace fs = std::filesystem;
using namespace ntm;

namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

void write_curve(const fs::path& path, const std::vector<CurvePoint>& curve) {
  std::ofstream out = open_output(path);
  out << "instances_seen,loss_bits\n";
  for (const CurvePoint& p : curve) out << p.instances_seen << ',' << format_fixed(p.loss_bits, 6) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

// --- generate ---------------------------------------------------------------

struct GenerateArgs {
  std::string task;
  std::size_t len = 0;
  std::size_t reps = 1;
  std::size_t bits = 0;
  std::string split;
  std::uint64_t seed = 0;
  fs::path out;
};

void run_generate(const GenerateArgs& a) {
  TaskConfig task = default_task(a.task);
  std::visit(
      [&](auto& t) {
        if (a.bits) t.bits = a.bits;
        if (!a.split.empty()) t.split = parse_split(a.split);
        t.max_len = std::max(t.max_len, a.len);
        if constexpr (std::is_same_v<std::decay_t<decltype(t)>, RepeatCopyConfig>)
          t.max_reps = std::max(t.max_reps, a.reps);
      },
      task);
  const TaskInstance inst = eval_instance(EvalSpec{task, a.len, a.reps, 0}, a.seed, 0);
  std::ofstream out = open_output(a.out);
  write_instance(out, task_name(task), inst);
  if (!out) throw IoError("failed writing '" + a.out.string() + "'");
}

// --- train ------------------------------------------------------------------

struct TrainArgs {
  std::string task;
  fs::path config;
  fs::path out;
  fs::path curve;
  fs::path resume;
};

void run_train(const TrainArgs& a) {
  const RunConfig cfg = load_run_config(a.task, a.config);
  TrainState state = start_training(cfg.model, cfg.train);
  if (!a.resume.empty()) {
    const Checkpoint ckpt = load_checkpoint(a.resume);
    if (task_name(ckpt.task) != task_name(cfg.task))
      throw ConfigError("resume checkpoint holds a '" + std::string(task_name(ckpt.task)) +
                        "' model, not '" + a.task + "'");
    if (ckpt.model_config != cfg.model)
      throw ConfigError("resume checkpoint model size differs from the config");
    if (ckpt.progress && ckpt.progress->seed != cfg.train.seed)
      throw ConfigError("resume checkpoint was trained with seed " +
                        std::to_string(ckpt.progress->seed) + ", config says " +
                        std::to_string(cfg.train.seed));
    state = restore_training(ckpt);
  }

  TrainHooks hooks;
  hooks.report = [](const CurvePoint& p) {
    std::cerr << "instances " << p.instances_seen << "  loss " << format_fixed(p.loss_bits, 4)
              << " bits/seq\n";
  };
  hooks.checkpoint = [&](const TrainState& s) {
    save_checkpoint(checkpoint_of(s, cfg.task, cfg.train), a.out);
  };
  train_loop(cfg.train, cfg.task, state, hooks);
  save_checkpoint(checkpoint_of(state, cfg.task, cfg.train), a.out);
  write_curve(a.curve, state.curve);
}

// --- eval / render ----------------------------------------------------------

struct ModelTaskArgs {
  fs::path model;
  std::string task;
  std::size_t len = 0;
  std::size_t reps = 1;
  std::uint64_t seed = 0;
  std::string split;
};

struct EvalArgs : ModelTaskArgs {
  std::size_t count = 0;
  fs::path stats;
  std::size_t workers = 1;
  std::size_t global_threshold = 0;
};

struct RenderArgs : ModelTaskArgs {
  fs::path outdir;
};

// Task of the checkpoint, evaluated on the copy Test split unless overridden.
EvalSpec eval_spec(const Checkpoint& ckpt, const ModelTaskArgs& a) {
  if (task_name(ckpt.task) != a.task)
    throw ConfigError("checkpoint holds a '" + std::string(task_name(ckpt.task)) +
                      "' model, not '" + a.task + "'");
  EvalSpec spec{ckpt.task, a.len, a.reps, 0};
  std::visit(
      [&](auto& t) {
        if (!a.split.empty()) t.split = parse_split(a.split);
        else if constexpr (std::is_same_v<std::decay_t<decltype(t)>, CopyConfig>)
          t.split = t.bits % 2 == 0 ? Split::Test : Split::All;
      },
      spec.task);
  return spec;
}

void run_eval(const EvalArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.model);
  const NtmModel model = ckpt.model();
  EvalSpec spec = eval_spec(ckpt, a);
  spec.global_threshold = a.global_threshold;
  const EvalStats stats = evaluate(model, spec, a.count, a.seed, a.workers);
  std::ofstream out = open_output(a.stats);
  write_stats_header(out);
  write_stats_row(out, a.task, a.len, a.reps, stats);
  if (!out) throw IoError("failed writing '" + a.stats.string() + "'");
}

void run_render(const RenderArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.model);
  const NtmModel model = ckpt.model();
  const TaskInstance inst = eval_instance(eval_spec(ckpt, a), a.seed, 0);
  const Prediction p = predict(model, inst.input);
  render_trace(inst, p.outputs, p.trace, a.outdir);
}

void add_model_task(CLI::App* cmd, ModelTaskArgs& a) {
  cmd->add_option("--model", a.model, "Checkpoint file")->required();
  cmd->add_option("--task", a.task, "copy or repeat")
      ->required()
      ->check(CLI::IsMember({"copy", "repeat"}));
  cmd->add_option("--len", a.len, "Sequence length")->required()->check(CLI::PositiveNumber);
  cmd->add_option("--reps", a.reps, "Repetitions (repeat task)")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", a.seed, "Instance seed");
  cmd->add_option("--split", a.split, "Vector split (default: test for copy)")
      ->check(CLI::IsMember({"train", "test", "all"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural Turing Machine copy and repeat-copy toolkit"};
  app.require_subcommand(1);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Write one task instance as an NTMTASK v1 dump");
  g->add_option("--task", gen.task, "copy or repeat")
      ->required()
      ->check(CLI::IsMember({"copy", "repeat"}));
  g->add_option("--len", gen.len, "Sequence length")->required()->check(CLI::PositiveNumber);
  g->add_option("--reps", gen.reps, "Repetitions (repeat task)")->check(CLI::PositiveNumber);
  g->add_option("--bits", gen.bits, "Bits per vector (default 8 copy, 6 repeat)")
      ->check(CLI::PositiveNumber);
  g->add_option("--split", gen.split, "train, test or all")
      ->check(CLI::IsMember({"train", "test", "all"}));
  g->add_option("--seed", gen.seed, "Instance seed");
  g->add_option("--out", gen.out, "Output file")->required();

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model and write a checkpoint and learning curve");
  t->add_option("--task", tr.task, "copy or repeat")
      ->required()
      ->check(CLI::IsMember({"copy", "repeat"}));
  t->add_option("--config", tr.config, "JSON run configuration")
      ->required()
      ->check(CLI::ExistingFile);
  t->add_option("--out", tr.out, "Checkpoint to write")->required();
  t->add_option("--curve", tr.curve, "Learning-curve CSV to write")->required();
  t->add_option("--resume", tr.resume, "Checkpoint to continue from")->check(CLI::ExistingFile);

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Bit-error statistics over random instances");
  add_model_task(e, ev);
  e->add_option("--count", ev.count, "Number of instances")->required()->check(CLI::PositiveNumber);
  e->add_option("--stats", ev.stats, "Stats CSV to write")->required();
  e->add_option("--workers", ev.workers, "Evaluation threads")->check(CLI::PositiveNumber);
  e->add_option("--global-threshold", ev.global_threshold,
                "Errors above which a sequence is a global error (default: bits per vector)");

  RenderArgs rd;
  auto* r = app.add_subcommand("render", "Heatmaps of targets, outputs, differences and weightings");
  add_model_task(r, rd);
  r->add_option("--outdir", rd.outdir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*g) run_generate(gen);
    else if (*t) run_train(tr);
    else if (*e) run_eval(ev);
    else if (*r) run_render(rd);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 0;
}
