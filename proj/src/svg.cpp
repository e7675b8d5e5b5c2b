#include "statsamp/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

#include "statsamp/csv.hpp"

namespace statsamp {

namespace {

constexpr double kCanvas = 640.0;
constexpr double kMargin = 48.0;

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

struct Bounds {
  double xmin = -1.0, xmax = 1.0, ymin = -1.0, ymax = 1.0;
};

Bounds compute_bounds(std::span<const double> pts) {
  Bounds b;
  const std::size_t n = pts.size() / 2;
  if (n == 0) return b;
  b.xmin = b.xmax = pts[0];
  b.ymin = b.ymax = pts[1];
  for (std::size_t i = 0; i < n; ++i) {
    b.xmin = std::min(b.xmin, pts[2 * i]);
    b.xmax = std::max(b.xmax, pts[2 * i]);
    b.ymin = std::min(b.ymin, pts[2 * i + 1]);
    b.ymax = std::max(b.ymax, pts[2 * i + 1]);
  }
  // pad 5%, or a unit box around degenerate extents
  const double dx = b.xmax - b.xmin, dy = b.ymax - b.ymin;
  const double px = dx > 0.0 ? 0.05 * dx : 1.0;
  const double py = dy > 0.0 ? 0.05 * dy : 1.0;
  b.xmin -= px;
  b.xmax += px;
  b.ymin -= py;
  b.ymax += py;
  return b;
}

}  // namespace

std::string render_scatter_svg(std::span<const double> points_xy,
                               std::span<const int> chain_of,
                               const SvgPlotOptions& options) {
  if (points_xy.size() % 2 != 0)
    throw std::invalid_argument("render_scatter_svg: points must be pairs");
  const std::size_t n = points_xy.size() / 2;
  if (!chain_of.empty() && chain_of.size() != n)
    throw std::invalid_argument("render_scatter_svg: chain ids must match point count");

  const Bounds b = compute_bounds(points_xy);
  const double span_x = b.xmax - b.xmin;
  const double span_y = b.ymax - b.ymin;
  const double inner = kCanvas - 2.0 * kMargin;
  auto sx = [&](double x) { return kMargin + (x - b.xmin) / span_x * inner; };
  auto sy = [&](double y) { return kCanvas - kMargin - (y - b.ymin) / span_y * inner; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"640\" "
        "viewBox=\"0 0 640 640\">\n";
  os << "<rect width=\"640\" height=\"640\" fill=\"white\"/>\n";
  // axes frame with min/max tick labels
  os << "<rect x=\"" << fmt2(kMargin) << "\" y=\"" << fmt2(kMargin) << "\" width=\""
     << fmt2(inner) << "\" height=\"" << fmt2(inner)
     << "\" fill=\"none\" stroke=\"#444444\" stroke-width=\"1\"/>\n";
  os << "<text x=\"" << fmt2(kMargin) << "\" y=\"" << fmt2(kCanvas - kMargin + 16.0)
     << "\" font-family=\"monospace\" font-size=\"11\">" << fmt_g6(b.xmin)
     << "</text>\n";
  os << "<text x=\"" << fmt2(kCanvas - kMargin) << "\" y=\""
     << fmt2(kCanvas - kMargin + 16.0)
     << "\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\">"
     << fmt_g6(b.xmax) << "</text>\n";
  os << "<text x=\"" << fmt2(kMargin - 4.0) << "\" y=\"" << fmt2(kCanvas - kMargin)
     << "\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\">"
     << fmt_g6(b.ymin) << "</text>\n";
  os << "<text x=\"" << fmt2(kMargin - 4.0) << "\" y=\"" << fmt2(kMargin + 4.0)
     << "\" font-family=\"monospace\" font-size=\"11\" text-anchor=\"end\">"
     << fmt_g6(b.ymax) << "</text>\n";
  if (!options.title.empty())
    os << "<text x=\"" << fmt2(kCanvas / 2.0) << "\" y=\"" << fmt2(kMargin - 16.0)
       << "\" font-family=\"monospace\" font-size=\"14\" text-anchor=\"middle\">"
       << options.title << "</text>\n";

  if (options.draw_lines && n > 1) {
    std::size_t start = 0;
    while (start < n) {
      std::size_t end = start + 1;
      if (!chain_of.empty())
        while (end < n && chain_of[end] == chain_of[start]) ++end;
      else
        end = n;
      if (end - start > 1) {
        os << "<polyline fill=\"none\" stroke=\"" << options.line_color
           << "\" stroke-width=\"0.8\" points=\"";
        for (std::size_t i = start; i < end; ++i) {
          if (i > start) os << " ";
          os << fmt2(sx(points_xy[2 * i])) << "," << fmt2(sy(points_xy[2 * i + 1]));
        }
        os << "\"/>\n";
      }
      start = end;
    }
  }

  for (std::size_t i = 0; i < n; ++i)
    os << "<circle cx=\"" << fmt2(sx(points_xy[2 * i])) << "\" cy=\""
       << fmt2(sy(points_xy[2 * i + 1])) << "\" r=\"2\" fill=\"" << options.point_color
       << "\"/>\n";

  os << "</svg>\n";
  return os.str();
}

void write_scatter_svg(const std::string& path, std::span<const double> points_xy,
                       std::span<const int> chain_of, const SvgPlotOptions& options) {
  write_text_file(path, render_scatter_svg(points_xy, chain_of, options));
}

}  // namespace statsamp
