#include "ntm/render.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <utility>

#include "ntm/error.hpp"
#include "ntm/format.hpp"

namespace ntm {

std::uint8_t pixel_value(double value, Colormap map) {
  double level = 0.0;
  if (map == Colormap::Linear) {
    level = std::clamp(value, 0.0, 1.0);
  } else {
    const double floor_exp = std::log10(kLogFloor);
    level = (std::log10(std::max(value, kLogFloor)) - floor_exp) / -floor_exp;
    level = std::clamp(level, 0.0, 1.0);
  }
  return static_cast<std::uint8_t>(std::lround(255.0 * level));
}

std::vector<std::uint8_t> Heatmap::pixels() const {
  std::vector<std::uint8_t> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) out[i] = pixel_value(values[i], colormap);
  return out;
}

Heatmap time_heatmap(const Tensor& time_major, Colormap map) {
  if (time_major.rank() != 2) throw DimensionError("time_heatmap needs a [T x K] tensor");
  const std::size_t steps = time_major.rows(), k = time_major.cols();
  Tensor t({k, steps});
  for (std::size_t s = 0; s < steps; ++s)
    for (std::size_t c = 0; c < k; ++c) t.at(c, s) = time_major.at(s, c);
  return {std::move(t), map};
}

void write_pgm(std::ostream& out, const Heatmap& map) {
  out << "P5\n" << map.cols() << ' ' << map.rows() << "\n255\n";
  const auto px = map.pixels();
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

void write_csv(std::ostream& out, const Heatmap& map) {
  for (std::size_t r = 0; r < map.rows(); ++r) {
    const auto row = map.values.row(r);
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_shortest(row[c]);
    out << '\n';
  }
}

TraceImages trace_images(const TaskInstance& inst, const Tensor& outputs, const StepTrace& trace) {
  if (outputs.shape() != inst.target.shape())
    throw DimensionError("render: outputs " + shape_string(outputs.shape()) + " vs target " +
                         shape_string(inst.target.shape()));
  if (trace.size() != inst.steps()) throw DimensionError("render: trace length mismatch");

  Tensor shown(outputs.shape()), diff(outputs.shape());
  for (std::size_t t = 0; t < outputs.rows(); ++t) {
    if (!inst.mask[t]) continue;
    for (std::size_t c = 0; c < outputs.cols(); ++c) {
      shown.at(t, c) = outputs.at(t, c);
      diff.at(t, c) = std::abs(outputs.at(t, c) - inst.target.at(t, c));
    }
  }
  const std::size_t n = trace.front().read_weighting.size();
  Tensor reads({trace.size(), n}), writes({trace.size(), n});
  for (std::size_t t = 0; t < trace.size(); ++t) {
    std::ranges::copy(trace[t].read_weighting.data(), reads.row(t).begin());
    std::ranges::copy(trace[t].write_weighting.data(), writes.row(t).begin());
  }
  return {time_heatmap(inst.target, Colormap::Linear), time_heatmap(shown, Colormap::Linear),
          time_heatmap(diff, Colormap::Logarithmic), time_heatmap(reads, Colormap::Linear),
          time_heatmap(writes, Colormap::Linear)};
}

std::vector<std::filesystem::path> render_trace(const TaskInstance& inst, const Tensor& outputs,
                                                const StepTrace& trace,
                                                const std::filesystem::path& out_dir) {
  const TraceImages images = trace_images(inst, outputs, trace);
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());

  const std::pair<const char*, const Heatmap*> named[] = {
      {"target", &images.target},
      {"output", &images.output},
      {"difference", &images.difference},
      {"read_weighting", &images.read_weighting},
      {"write_weighting", &images.write_weighting},
  };
  std::vector<std::filesystem::path> written;
  for (const auto& [name, map] : named) {
    for (const char* ext : {".pgm", ".csv"}) {
      const auto path = out_dir / (std::string(name) + ext);
      std::ofstream out(path, std::ios::binary | std::ios::trunc);
      if (!out) throw IoError("cannot write '" + path.string() + "'");
      if (std::string_view(ext) == ".pgm") write_pgm(out, *map);
      else write_csv(out, *map);
      if (!out) throw IoError("failed writing '" + path.string() + "'");
      written.push_back(path);
    }
  }
  return written;
}

}  // namespace ntm
