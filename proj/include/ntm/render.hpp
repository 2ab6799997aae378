#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "ntm/machine.hpp"
#include "ntm/tasks.hpp"

namespace ntm {

enum class Colormap { Linear, Logarithmic };

/// Values below this are drawn as black on a logarithmic map.
inline constexpr double kLogFloor = 1e-10;

/// Grayscale intensity in [0, 255] for one value:
///   linear       round(255 * clamp(v, 0, 1))
///   logarithmic  round(255 * (log10(max(v, 1e-10)) + 10) / 10), clamped to [0, 255]
std::uint8_t pixel_value(double value, Colormap map);

/// rows x cols grid of values; rendered with row 0 at the top.
struct Heatmap {
  Tensor values;  // [rows x cols]
  Colormap colormap = Colormap::Linear;

  std::size_t rows() const { return values.rows(); }
  std::size_t cols() const { return values.cols(); }
  std::vector<std::uint8_t> pixels() const;
};

/// Transposes a time-major [T x K] tensor so that time runs along the columns.
Heatmap time_heatmap(const Tensor& time_major, Colormap map);

/// Binary 8-bit graymap: "P5\n<cols> <rows>\n255\n" then the pixels row by row.
void write_pgm(std::ostream& out, const Heatmap& map);
/// One line per heatmap row, comma separated, shortest round-trip decimals.
void write_csv(std::ostream& out, const Heatmap& map);

struct TraceImages {
  Heatmap target;
  Heatmap output;
  Heatmap difference;
  Heatmap read_weighting;
  Heatmap write_weighting;
};

/// Channel x time maps of target, output and |output - target| (outputs and
/// differences are zeroed outside the recall steps; the difference uses the
/// logarithmic map), and location x time maps of both weightings.
TraceImages trace_images(const TaskInstance& inst, const Tensor& outputs, const StepTrace& trace);

/// Writes each map of trace_images as <name>.pgm and <name>.csv into `out_dir`,
/// creating it if needed. Returns the written paths.
std::vector<std::filesystem::path> render_trace(const TaskInstance& inst, const Tensor& outputs,
                                                const StepTrace& trace,
                                                const std::filesystem::path& out_dir);

}  // namespace ntm
