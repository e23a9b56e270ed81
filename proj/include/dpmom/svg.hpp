#ifndef DPMOM_SVG_HPP
#define DPMOM_SVG_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "dpmom/error.hpp"

namespace dpmom {

// Small self-contained SVG writers for the two figure styles the reports
// need: cluster scatter plots and ARI-versus-contamination line charts.

struct ScatterPoint {
  double x = 0.0;
  double y = 0.0;
  std::size_t cluster = 0;  // color index
  bool outlier = false;     // drawn as a cross instead of a dot
};

struct LineSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;
};

namespace detail {

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                 "#ff7f0e", "#8c564b", "#e377c2", "#17becf",
                                 "#bcbd22", "#7f7f7f"};
  return colors[i % 10];
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

struct Frame {
  double x_lo, x_hi, y_lo, y_hi;
  double width, height, margin;

  [[nodiscard]] double sx(double x) const {
    const double span = x_hi > x_lo ? x_hi - x_lo : 1.0;
    return margin + (x - x_lo) / span * (width - 2 * margin);
  }
  [[nodiscard]] double sy(double y) const {
    const double span = y_hi > y_lo ? y_hi - y_lo : 1.0;
    return height - margin - (y - y_lo) / span * (height - 2 * margin);
  }
};

}  // namespace detail

inline std::string render_scatter_svg(const std::vector<ScatterPoint>& points,
                                      double width = 640.0,
                                      double height = 480.0) {
  check_contract(!points.empty(), "render_scatter_svg: no points");
  detail::Frame f{points[0].x, points[0].x, points[0].y, points[0].y,
                  width, height, 40.0};
  for (const auto& p : points) {
    f.x_lo = std::min(f.x_lo, p.x);
    f.x_hi = std::max(f.x_hi, p.x);
    f.y_lo = std::min(f.y_lo, p.y);
    f.y_hi = std::max(f.y_hi, p.y);
  }

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (const auto& p : points) {
    const double cx = f.sx(p.x);
    const double cy = f.sy(p.y);
    if (p.outlier) {
      out << "<path d=\"M" << detail::fmt(cx - 3) << ' ' << detail::fmt(cy - 3)
          << " L" << detail::fmt(cx + 3) << ' ' << detail::fmt(cy + 3) << " M"
          << detail::fmt(cx - 3) << ' ' << detail::fmt(cy + 3) << " L"
          << detail::fmt(cx + 3) << ' ' << detail::fmt(cy - 3)
          << "\" stroke=\"#444444\" stroke-width=\"1.2\"/>\n";
    } else {
      out << "<circle cx=\"" << detail::fmt(cx) << "\" cy=\"" << detail::fmt(cy)
          << "\" r=\"3\" fill=\"" << detail::palette(p.cluster) << "\"/>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

inline std::string render_lines_svg(const std::vector<LineSeries>& series,
                                    double width = 640.0,
                                    double height = 480.0) {
  check_contract(!series.empty(), "render_lines_svg: no series");
  for (const auto& s : series) {
    check_contract(!s.points.empty(), "render_lines_svg: empty series");
  }

  detail::Frame f{series[0].points[0].first, series[0].points[0].first,
                  series[0].points[0].second, series[0].points[0].second,
                  width, height, 50.0};
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      f.x_lo = std::min(f.x_lo, x);
      f.x_hi = std::max(f.x_hi, x);
      f.y_lo = std::min(f.y_lo, y);
      f.y_hi = std::max(f.y_hi, y);
    }
  }

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
      << "\" height=\"" << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  // axes
  out << "<line x1=\"" << detail::fmt(f.sx(f.x_lo)) << "\" y1=\""
      << detail::fmt(f.sy(f.y_lo)) << "\" x2=\"" << detail::fmt(f.sx(f.x_hi))
      << "\" y2=\"" << detail::fmt(f.sy(f.y_lo))
      << "\" stroke=\"#333333\"/>\n";
  out << "<line x1=\"" << detail::fmt(f.sx(f.x_lo)) << "\" y1=\""
      << detail::fmt(f.sy(f.y_lo)) << "\" x2=\"" << detail::fmt(f.sx(f.x_lo))
      << "\" y2=\"" << detail::fmt(f.sy(f.y_hi))
      << "\" stroke=\"#333333\"/>\n";
  out << "<text x=\"" << detail::fmt(f.sx(f.x_lo)) << "\" y=\""
      << detail::fmt(f.sy(f.y_lo) + 16) << "\" font-size=\"10\">"
      << detail::fmt(f.x_lo) << "</text>\n";
  out << "<text x=\"" << detail::fmt(f.sx(f.x_hi) - 20) << "\" y=\""
      << detail::fmt(f.sy(f.y_lo) + 16) << "\" font-size=\"10\">"
      << detail::fmt(f.x_hi) << "</text>\n";
  out << "<text x=\"" << detail::fmt(f.sx(f.x_lo) - 36) << "\" y=\""
      << detail::fmt(f.sy(f.y_hi)) << "\" font-size=\"10\">"
      << detail::fmt(f.y_hi) << "</text>\n";
  out << "<text x=\"" << detail::fmt(f.sx(f.x_lo) - 36) << "\" y=\""
      << detail::fmt(f.sy(f.y_lo)) << "\" font-size=\"10\">"
      << detail::fmt(f.y_lo) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    out << "<polyline fill=\"none\" stroke=\"" << detail::palette(s)
        << "\" stroke-width=\"1.5\" points=\"";
    for (const auto& [x, y] : series[s].points) {
      out << detail::fmt(f.sx(x)) << ',' << detail::fmt(f.sy(y)) << ' ';
    }
    out << "\"/>\n";
    out << "<text x=\"" << detail::fmt(f.sx(f.x_hi) - 60) << "\" y=\""
        << detail::fmt(20.0 + 14.0 * static_cast<double>(s))
        << "\" font-size=\"11\" fill=\"" << detail::palette(s) << "\">"
        << series[s].name << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

// render first, then write, so a failed render leaves no file behind
inline void write_svg(const std::string& body, const std::string& path) {
  std::ofstream out(path);
  check(out.good(), ErrorCode::IoError, "cannot write file: " + path);
  out << body;
  check(out.good(), ErrorCode::IoError, "write failed: " + path);
}

}  // namespace dpmom

#endif  // DPMOM_SVG_HPP
