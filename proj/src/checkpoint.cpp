#include "ntm/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

namespace ntm {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr std::uint32_t kMaxRank = 8;
constexpr std::uint32_t kMaxName = 4096;
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 30;

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  template <class T>
  void pod(T v) {
    out_.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
  void u8(std::uint8_t v) { pod(v); }
  void u32(std::uint64_t v) {
    if (v > std::numeric_limits<std::uint32_t>::max())
      throw CheckpointError("value too large for a u32 field");
    pod(static_cast<std::uint32_t>(v));
  }
  void u64(std::uint64_t v) { pod(v); }
  void f64(double v) { pod(v); }
  void str(std::string_view s) {
    u32(s.size());
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  void array(const std::string& name, const Tensor& t) {
    str(name);
    u32(t.rank());
    for (std::size_t d : t.shape()) u32(d);
    out_.write(reinterpret_cast<const char*>(t.data().data()),
               static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
  void arrays(const std::vector<Tensor>& ts, std::span<const Parameter> names) {
    u32(ts.size());
    for (std::size_t i = 0; i < ts.size(); ++i) array(names[i].name, ts[i]);
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  template <class T>
  T pod(const char* field) {
    T v{};
    if (!in_.read(reinterpret_cast<char*>(&v), sizeof(T)))
      throw CheckpointError(std::string("truncated checkpoint while reading ") + field);
    return v;
  }
  std::uint8_t u8(const char* f) { return pod<std::uint8_t>(f); }
  std::uint32_t u32(const char* f) { return pod<std::uint32_t>(f); }
  std::uint64_t u64(const char* f) { return pod<std::uint64_t>(f); }
  double f64(const char* f) { return pod<double>(f); }
  std::string str(const char* field) {
    const std::uint32_t n = u32(field);
    if (n > kMaxName) throw CheckpointError(std::string("implausible length for ") + field);
    std::string s(n, '\0');
    if (n && !in_.read(s.data(), n))
      throw CheckpointError(std::string("truncated checkpoint while reading ") + field);
    return s;
  }
  Parameter array() {
    Parameter p;
    p.name = str("array name");
    const std::uint32_t rank = u32("array rank");
    if (rank == 0 || rank > kMaxRank)
      throw CheckpointError("array '" + p.name + "': bad rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& d : shape) {
      d = u32("array dims");
      if (d == 0) throw CheckpointError("array '" + p.name + "': zero dimension");
    }
    std::uint64_t count = 1;
    for (std::size_t d : shape) {
      count *= d;
      if (count > kMaxElements)
        throw CheckpointError("array '" + p.name + "': implausible size");
    }
    std::vector<double> data(count);
    if (!in_.read(reinterpret_cast<char*>(data.data()),
                  static_cast<std::streamsize>(data.size() * sizeof(double))))
      throw CheckpointError("truncated checkpoint while reading data of '" + p.name + "'");
    p.value = Tensor(std::move(shape), std::move(data));
    return p;
  }
  std::vector<Parameter> arrays(const char* field) {
    const std::uint32_t n = u32(field);
    std::vector<Parameter> out;
    for (std::uint32_t i = 0; i < n; ++i) out.push_back(array());
    return out;
  }

 private:
  std::istream& in_;
};

// Optimizer slots are stored under the parameter names; order must match.
std::vector<Tensor> slots_from(std::vector<Parameter> arrays, const ModelConfig& cfg,
                               const char* field) {
  std::vector<Tensor> out;
  if (arrays.empty()) return out;
  const auto layout = parameter_layout(cfg);
  if (arrays.size() != layout.size())
    throw CheckpointError(std::string(field) + ": expected one slot per parameter");
  for (std::size_t i = 0; i < arrays.size(); ++i) {
    if (arrays[i].name != layout[i].name || arrays[i].value.shape() != layout[i].shape)
      throw CheckpointError(std::string(field) + ": slot '" + arrays[i].name +
                            "' does not match parameter '" + layout[i].name + "'");
    out.push_back(std::move(arrays[i].value));
  }
  return out;
}

}  // namespace

Checkpoint Checkpoint::of(const NtmModel& model, const TaskConfig& task) {
  Checkpoint c;
  c.model_config = model.config();
  c.task = task;
  c.parameters.assign(model.parameters().begin(), model.parameters().end());
  return c;
}

NtmModel Checkpoint::model() const {
  try {
    return NtmModel::from_parameters(model_config, parameters);
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint parameters: ") + e.what());
  }
}

void write_checkpoint(std::ostream& out, const Checkpoint& c) {
  Writer w(out);
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  w.u32(kCheckpointVersion);

  std::visit(
      [&](const auto& t) {
        w.str(task_name(c.task));
        w.u32(t.bits);
        w.u32(t.min_len);
        w.u32(t.max_len);
        if constexpr (std::is_same_v<std::decay_t<decltype(t)>, RepeatCopyConfig>) {
          w.u32(t.min_reps);
          w.u32(t.max_reps);
          w.f64(t.rep_normalizer);
        } else {
          w.u32(1);
          w.u32(1);
          w.f64(1.0);
        }
        w.u8(static_cast<std::uint8_t>(t.split));
      },
      c.task);

  const ModelConfig& m = c.model_config;
  w.u32(m.memory_rows);
  w.u32(m.memory_width);
  w.u32(m.hidden);
  w.u32(m.input_channels);
  w.u32(m.output_channels);

  w.u32(c.parameters.size());
  for (const Parameter& p : c.parameters) w.array(p.name, p.value);

  w.u8(c.optimizer ? 1 : 0);
  if (c.optimizer) {
    const auto& o = *c.optimizer;
    w.u8(static_cast<std::uint8_t>(o.config.kind));
    w.f64(o.config.decay);
    w.f64(o.config.epsilon);
    w.f64(o.config.momentum);
    w.u64(o.state.steps);
    w.arrays(o.state.square_avg, c.parameters);
    w.arrays(o.state.velocity, c.parameters);
  }

  w.u8(c.progress ? 1 : 0);
  if (c.progress) {
    const auto& p = *c.progress;
    w.u64(p.seed);
    w.u64(p.instances_seen);
    w.f64(p.window_bits);
    w.u64(p.window_count);
    w.u32(p.curve.size());
    for (const CurvePoint& pt : p.curve) {
      w.u64(pt.instances_seen);
      w.f64(pt.loss_bits);
    }
  }
  if (!out) throw CheckpointError("failed writing checkpoint");
}

Checkpoint read_checkpoint(std::istream& in) {
  Reader r(in);
  char magic[sizeof(kCheckpointMagic)]{};
  if (!in.read(magic, sizeof(magic))) throw CheckpointError("truncated checkpoint header");
  if (std::memcmp(magic, kCheckpointMagic, 7) != 0)
    throw CheckpointError("bad magic: not an NTMCKPT checkpoint");
  if (magic[7] != kCheckpointMagic[7])
    throw CheckpointError(std::string("unsupported checkpoint version in magic: '") + magic[7] +
                          "'");
  const std::uint32_t version = r.u32("version");
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));

  Checkpoint c;
  const std::string task = r.str("task name");
  const std::uint32_t bits = r.u32("task bits");
  const std::uint32_t min_len = r.u32("task min_len");
  const std::uint32_t max_len = r.u32("task max_len");
  const std::uint32_t min_reps = r.u32("task min_reps");
  const std::uint32_t max_reps = r.u32("task max_reps");
  const double normalizer = r.f64("task rep_normalizer");
  const std::uint8_t split = r.u8("task split");
  if (split > static_cast<std::uint8_t>(Split::All))
    throw CheckpointError("task split: unknown value " + std::to_string(split));
  if (task == "copy") {
    c.task = CopyConfig{bits, min_len, max_len, static_cast<Split>(split)};
  } else if (task == "repeat") {
    c.task = RepeatCopyConfig{bits, min_len, max_len, min_reps, max_reps, normalizer,
                              static_cast<Split>(split)};
  } else {
    throw CheckpointError("task name: unknown task '" + task + "'");
  }
  try {
    std::visit([](const auto& t) { t.validate(); }, c.task);
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("task config: ") + e.what());
  }

  ModelConfig& m = c.model_config;
  m.memory_rows = r.u32("model memory_rows");
  m.memory_width = r.u32("model memory_width");
  m.hidden = r.u32("model hidden");
  m.input_channels = r.u32("model input_channels");
  m.output_channels = r.u32("model output_channels");
  try {
    m.validate();
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("model config: ") + e.what());
  }

  c.parameters = r.arrays("parameter count");

  if (r.u8("optimizer flag")) {
    OptimizerSnapshot o;
    const std::uint8_t kind = r.u8("optimizer kind");
    if (kind > static_cast<std::uint8_t>(OptimizerKind::SgdMomentum))
      throw CheckpointError("optimizer kind: unknown value " + std::to_string(kind));
    o.config.kind = static_cast<OptimizerKind>(kind);
    o.config.decay = r.f64("optimizer decay");
    o.config.epsilon = r.f64("optimizer epsilon");
    o.config.momentum = r.f64("optimizer momentum");
    o.state.steps = r.u64("optimizer steps");
    o.state.square_avg = slots_from(r.arrays("optimizer square_avg"), m, "optimizer square_avg");
    o.state.velocity = slots_from(r.arrays("optimizer velocity"), m, "optimizer velocity");
    c.optimizer = std::move(o);
  }

  if (r.u8("progress flag")) {
    TrainProgress p;
    p.seed = r.u64("progress seed");
    p.instances_seen = r.u64("progress instances_seen");
    p.window_bits = r.f64("progress window_bits");
    p.window_count = r.u64("progress window_count");
    const std::uint32_t n = r.u32("progress curve length");
    for (std::uint32_t i = 0; i < n; ++i) {
      CurvePoint pt;
      pt.instances_seen = r.u64("progress curve");
      pt.loss_bits = r.f64("progress curve");
      p.curve.push_back(pt);
    }
    c.progress = std::move(p);
  }
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  // Written beside the target, then renamed over it.
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open '" + tmp.string() + "' for writing");
    write_checkpoint(out, ckpt);
    out.flush();
    if (!out) throw CheckpointError("failed writing '" + tmp.string() + "'");
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint '" + path.string() + "'");
  return read_checkpoint(in);
}

void save_checkpoint(const NtmModel& model, const TaskConfig& task,
                     const std::filesystem::path& path) {
  save_checkpoint(Checkpoint::of(model, task), path);
}

NtmModel load_model(const std::filesystem::path& path) { return load_checkpoint(path).model(); }

Checkpoint checkpoint_of(const TrainState& state, const TaskConfig& task, const TrainConfig& cfg) {
  Checkpoint c = Checkpoint::of(state.model, task);
  c.optimizer = OptimizerSnapshot{cfg.optimizer, state.optimizer};
  c.progress = TrainProgress{cfg.seed, state.instances_seen, state.window_bits,
                             state.window_count, state.curve};
  return c;
}

TrainState restore_training(const Checkpoint& ckpt) {
  TrainState s{ckpt.model(), {}, 0, 0.0, 0, {}};
  if (ckpt.optimizer) s.optimizer = ckpt.optimizer->state;
  if (ckpt.progress) {
    s.instances_seen = ckpt.progress->instances_seen;
    s.window_bits = ckpt.progress->window_bits;
    s.window_count = ckpt.progress->window_count;
    s.curve = ckpt.progress->curve;
  }
  return s;
}

}  // namespace ntm
