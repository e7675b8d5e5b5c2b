#pragma once

#include <span>
#include <string>
#include <vector>

namespace statsamp {

/// Self-contained scatter / trajectory SVG. Output bytes depend only on the
/// input data, so replaying a run reproduces the file exactly.
struct SvgPlotOptions {
  std::string title;
  /// Polyline per chain through its points, in input order.
  bool draw_lines = false;
  std::string point_color = "#1f6fb5";
  std::string line_color = "#9dc2e0";
};

/// points: n x 2 (first two coordinates of each sample); chain_of: optional
/// per-point chain id used to group polylines (empty means one group).
std::string render_scatter_svg(std::span<const double> points_xy,
                               std::span<const int> chain_of,
                               const SvgPlotOptions& options);

void write_scatter_svg(const std::string& path, std::span<const double> points_xy,
                       std::span<const int> chain_of, const SvgPlotOptions& options);

}  // namespace statsamp
