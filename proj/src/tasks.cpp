#include "ntm/tasks.hpp"

#include <bit>
#include <istream>
#include <ostream>
#include <sstream>

#include "ntm/error.hpp"
#include "ntm/format.hpp"

namespace ntm {
namespace {

constexpr std::size_t kMaxBits = 63;

void fill_vector(Tensor& t, std::size_t row, std::uint64_t pattern, std::size_t bits) {
  for (std::size_t b = 0; b < bits; ++b) t.at(row, b) = static_cast<double>((pattern >> b) & 1u);
}

}  // namespace

std::string_view to_string(Split split) {
  switch (split) {
    case Split::Train: return "train";
    case Split::Test: return "test";
    case Split::All: return "all";
  }
  return "all";
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "test") return Split::Test;
  if (text == "all") return Split::All;
  throw ConfigError("unknown split '" + std::string(text) + "'");
}

std::size_t TaskInstance::recall_steps() const {
  std::size_t n = 0;
  for (bool m : mask) n += m;
  return n;
}

void CopyConfig::validate() const {
  if (bits == 0 || bits > kMaxBits) throw ConfigError("copy: bits must be in [1, 63]");
  if (min_len == 0 || min_len > max_len) throw ConfigError("copy: need 1 <= min_len <= max_len");
  if (split != Split::All && bits % 2 != 0)
    throw ConfigError("copy: the bit-sum split needs an even number of bits");
}

void RepeatCopyConfig::validate() const {
  if (bits == 0 || bits > kMaxBits) throw ConfigError("repeat copy: bits must be in [1, 63]");
  if (min_len == 0 || min_len > max_len)
    throw ConfigError("repeat copy: need 1 <= min_len <= max_len");
  if (min_reps == 0 || min_reps > max_reps)
    throw ConfigError("repeat copy: need 1 <= min_reps <= max_reps");
  if (!(rep_normalizer > 0.0)) throw ConfigError("repeat copy: rep_normalizer must be positive");
  if (split != Split::All && bits % 2 != 0)
    throw ConfigError("repeat copy: the bit-sum split needs an even number of bits");
}

std::string_view task_name(const TaskConfig& task) {
  return std::holds_alternative<CopyConfig>(task) ? "copy" : "repeat";
}

std::size_t input_channels(const TaskConfig& task) {
  return std::visit([](const auto& c) { return c.input_channels(); }, task);
}

std::size_t target_channels(const TaskConfig& task) {
  return std::visit([](const auto& c) { return c.target_channels(); }, task);
}

std::size_t data_bits(const TaskConfig& task) {
  return std::visit([](const auto& c) { return c.bits; }, task);
}

Split vector_split(std::uint64_t pattern, std::size_t bits) {
  if (bits % 2 != 0)
    throw ConfigError("bit-sum split undefined for odd width " + std::to_string(bits));
  if (bits > kMaxBits) throw ConfigError("vector width above 63 bits");
  const auto ones = static_cast<std::size_t>(std::popcount(pattern));
  return ones == bits / 2 ? Split::Test : Split::Train;
}

Split vector_split(const std::vector<int>& bits) {
  std::uint64_t pattern = 0;
  for (std::size_t i = 0; i < bits.size(); ++i)
    if (bits[i]) pattern |= std::uint64_t{1} << i;
  return vector_split(pattern, bits.size());
}

bool in_split(std::uint64_t pattern, std::size_t bits, Split split) {
  return split == Split::All || vector_split(pattern, bits) == split;
}

std::uint64_t sample_vector(Rng& rng, std::size_t bits, Split split) {
  if (bits == 0 || bits > kMaxBits) throw ConfigError("vector width must be in [1, 63]");
  const std::uint64_t keep = (std::uint64_t{1} << bits) - 1;
  // Train rejects C(b, b/2) / 2^b of draws (27% for 8 bits).
  for (;;) {
    const std::uint64_t pattern = rng.next_u64() & keep;
    if (in_split(pattern, bits, split)) return pattern;
  }
}

TaskInstance gen_copy(Rng& rng, std::size_t length, const CopyConfig& cfg) {
  cfg.validate();
  if (length == 0) throw ContractError("copy: sequence length must be at least 1");
  const std::size_t steps = 2 * length + 1;
  TaskInstance inst{Tensor({steps, cfg.input_channels()}),
                    Tensor({steps, cfg.target_channels()}), Mask(steps, false), length, 1};
  for (std::size_t i = 0; i < length; ++i) {
    const std::uint64_t v = sample_vector(rng, cfg.bits, cfg.split);
    fill_vector(inst.input, i, v, cfg.bits);
    fill_vector(inst.target, length + 1 + i, v, cfg.bits);
    inst.mask[length + 1 + i] = true;
  }
  inst.input.at(length, cfg.bits) = 1.0;
  return inst;
}

TaskInstance gen_repeat_copy(Rng& rng, std::size_t length, std::size_t reps,
                             const RepeatCopyConfig& cfg) {
  cfg.validate();
  if (length == 0 || reps == 0)
    throw ContractError("repeat copy: length and repetitions must be at least 1");
  const std::size_t recall = reps * length + 1;
  const std::size_t steps = length + 1 + recall;
  TaskInstance inst{Tensor({steps, cfg.input_channels()}),
                    Tensor({steps, cfg.target_channels()}), Mask(steps, false), length, reps};
  std::vector<std::uint64_t> seq(length);
  for (std::size_t i = 0; i < length; ++i) {
    seq[i] = sample_vector(rng, cfg.bits, cfg.split);
    fill_vector(inst.input, i, seq[i], cfg.bits);
  }
  inst.input.at(length, cfg.bits) = 1.0;
  inst.input.at(length, cfg.bits + 1) = static_cast<double>(reps) / cfg.rep_normalizer;
  for (std::size_t r = 0; r < reps; ++r)
    for (std::size_t i = 0; i < length; ++i)
      fill_vector(inst.target, length + 1 + r * length + i, seq[i], cfg.bits);
  inst.target.at(steps - 1, cfg.bits) = 1.0;
  for (std::size_t t = length + 1; t < steps; ++t) inst.mask[t] = true;
  return inst;
}

TaskInstance sample_training_instance(Rng& rng, const TaskConfig& task) {
  if (const auto* copy = std::get_if<CopyConfig>(&task)) {
    copy->validate();
    const auto len = static_cast<std::size_t>(rng.uniform_int(copy->min_len, copy->max_len));
    return gen_copy(rng, len, *copy);
  }
  const auto& rep = std::get<RepeatCopyConfig>(task);
  rep.validate();
  const auto len = static_cast<std::size_t>(rng.uniform_int(rep.min_len, rep.max_len));
  const auto reps = static_cast<std::size_t>(rng.uniform_int(rep.min_reps, rep.max_reps));
  return gen_repeat_copy(rng, len, reps, rep);
}

TaskInstance sample_training_instance(std::uint64_t seed, std::uint64_t index,
                                      const TaskConfig& task) {
  Rng rng(seed, index);
  TaskInstance inst = sample_training_instance(rng, task);
  inst.stream = index;
  return inst;
}

void write_instance(std::ostream& out, std::string_view task, const TaskInstance& inst) {
  const std::size_t steps = inst.steps();
  out << "NTMTASK v1 " << task << ' ' << steps << ' ' << inst.input.cols() << ' '
      << inst.target.cols() << '\n';
  auto write_rows = [&](const Tensor& t) {
    for (std::size_t r = 0; r < t.rows(); ++r) {
      const auto row = t.row(r);
      for (std::size_t c = 0; c < row.size(); ++c)
        out << (c ? " " : "") << format_shortest(row[c]);
      out << '\n';
    }
  };
  write_rows(inst.input);
  write_rows(inst.target);
  for (std::size_t t = 0; t < steps; ++t) out << (t ? " " : "") << (inst.mask[t] ? 1 : 0);
  out << '\n';
}

TaskInstance read_instance(std::istream& in, std::string* task) {
  std::string magic, version, name;
  std::size_t steps = 0, in_ch = 0, out_ch = 0;
  if (!(in >> magic >> version >> name >> steps >> in_ch >> out_ch) || magic != "NTMTASK" ||
      version != "v1")
    throw IoError("not an NTMTASK v1 dump");
  if (steps == 0 || in_ch == 0 || out_ch == 0) throw IoError("NTMTASK: empty dimensions");
  auto read_rows = [&](std::size_t cols, const char* what) {
    Tensor t({steps, cols});
    for (double& v : t.data())
      if (!(in >> v)) throw IoError(std::string("NTMTASK: truncated ") + what + " rows");
    return t;
  };
  TaskInstance inst;
  inst.input = read_rows(in_ch, "input");
  inst.target = read_rows(out_ch, "target");
  inst.mask.assign(steps, false);
  for (std::size_t t = 0; t < steps; ++t) {
    int m = 0;
    if (!(in >> m) || (m != 0 && m != 1)) throw IoError("NTMTASK: bad mask row");
    inst.mask[t] = m == 1;
  }
  const std::size_t recall = inst.recall_steps();
  if (name == "repeat") {
    // Data steps, delimiter step, and R*L + 1 recall steps.
    inst.length = steps - recall - 1;
    inst.reps = inst.length ? (recall - 1) / inst.length : 0;
  } else {
    inst.length = recall;
  }
  if (task) *task = name;
  return inst;
}

}  // namespace ntm
