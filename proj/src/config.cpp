#include "ntm/config.hpp"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ntm/error.hpp"

namespace ntm {
namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const char* section, std::set<std::string> known) {
  for (const auto& [key, value] : obj.items())
    if (!known.contains(key))
      throw ConfigError(std::string("unknown key '") + key + "' in section '" + section + "'");
}

template <class T>
void read(const json& obj, const char* key, T& out) {
  if (obj.contains(key)) out = obj.at(key).get<T>();
}

}  // namespace

TaskConfig default_task(std::string_view name) {
  if (name == "copy") return CopyConfig{};
  if (name == "repeat") return RepeatCopyConfig{};
  throw ConfigError("unknown task '" + std::string(name) + "' (expected copy or repeat)");
}

RunConfig parse_run_config(std::string_view task, std::string_view json_text) {
  RunConfig cfg{ModelConfig{}, default_task(task), TrainConfig{}};
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(root, "top level", {"model", "task", "train"});

  try {
    if (root.contains("model")) {
      const json& m = root.at("model");
      reject_unknown(m, "model", {"memory_rows", "memory_width", "hidden"});
      read(m, "memory_rows", cfg.model.memory_rows);
      read(m, "memory_width", cfg.model.memory_width);
      read(m, "hidden", cfg.model.hidden);
    }
    if (root.contains("task")) {
      const json& t = root.at("task");
      std::visit(
          [&](auto& tc) {
            std::set<std::string> keys{"bits", "min_len", "max_len", "split"};
            read(t, "bits", tc.bits);
            read(t, "min_len", tc.min_len);
            read(t, "max_len", tc.max_len);
            if (t.contains("split")) tc.split = parse_split(t.at("split").get<std::string>());
            if constexpr (std::is_same_v<std::decay_t<decltype(tc)>, RepeatCopyConfig>) {
              keys.insert({"min_reps", "max_reps", "rep_normalizer"});
              read(t, "min_reps", tc.min_reps);
              read(t, "max_reps", tc.max_reps);
              tc.rep_normalizer = static_cast<double>(tc.max_reps);
              read(t, "rep_normalizer", tc.rep_normalizer);
            }
            reject_unknown(t, "task", keys);
          },
          cfg.task);
    }
    if (root.contains("train")) {
      const json& t = root.at("train");
      reject_unknown(t, "train",
                     {"learning_rate", "optimizer", "decay", "epsilon", "momentum",
                      "clip_threshold", "batch_size", "total_instances", "report_every",
                      "checkpoint_every", "seed"});
      TrainConfig& tr = cfg.train;
      read(t, "learning_rate", tr.learning_rate);
      if (t.contains("optimizer")) {
        const auto name = t.at("optimizer").get<std::string>();
        if (name == "rmsprop") tr.optimizer.kind = OptimizerKind::RmsProp;
        else if (name == "sgd") tr.optimizer.kind = OptimizerKind::SgdMomentum;
        else throw ConfigError("unknown optimizer '" + name + "' (expected rmsprop or sgd)");
      }
      read(t, "decay", tr.optimizer.decay);
      read(t, "epsilon", tr.optimizer.epsilon);
      read(t, "momentum", tr.optimizer.momentum);
      // null disables clipping.
      if (t.contains("clip_threshold"))
        tr.clip_threshold = t.at("clip_threshold").is_null()
                                ? std::numeric_limits<double>::infinity()
                                : t.at("clip_threshold").get<double>();
      read(t, "batch_size", tr.batch_size);
      read(t, "total_instances", tr.total_instances);
      read(t, "report_every", tr.report_every);
      read(t, "checkpoint_every", tr.checkpoint_every);
      read(t, "seed", tr.seed);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }

  std::visit([](const auto& tc) { tc.validate(); }, cfg.task);
  cfg.model.input_channels = input_channels(cfg.task);
  cfg.model.output_channels = target_channels(cfg.task);
  cfg.model.validate();
  cfg.train.validate();
  return cfg;
}

RunConfig load_run_config(std::string_view task, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config(task, text.str());
}

}  // namespace ntm
