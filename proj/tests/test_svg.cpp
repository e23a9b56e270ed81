#include <doctest.h>

#include "dpmom/svg.hpp"

using namespace dpmom;

TEST_SUITE("svg") {

TEST_CASE("scatter render structure") {
  std::vector<ScatterPoint> points{
      {0.0, 0.0, 0, false}, {1.0, 1.0, 1, false}, {0.5, 0.5, 0, true}};
  const auto svg = render_scatter_svg(points);
  CHECK(svg.find("<svg") == 0);
  CHECK(svg.find("</svg>") != std::string::npos);

  std::size_t circles = 0, crosses = 0;
  for (auto at = svg.find("<circle"); at != std::string::npos;
       at = svg.find("<circle", at + 1)) {
    ++circles;
  }
  for (auto at = svg.find("<path"); at != std::string::npos;
       at = svg.find("<path", at + 1)) {
    ++crosses;
  }
  CHECK(circles == 2);
  CHECK(crosses == 1);

  // distinct clusters get distinct fills
  CHECK(svg.find("#1f77b4") != std::string::npos);
  CHECK(svg.find("#d62728") != std::string::npos);

  CHECK_THROWS_AS((void)render_scatter_svg({}), Error);
}

TEST_CASE("line render structure") {
  std::vector<LineSeries> series{{"one", {{0.0, 0.1}, {1.0, 0.5}}},
                                 {"two", {{0.0, 0.9}, {1.0, 0.2}}}};
  const auto svg = render_lines_svg(series);
  std::size_t polylines = 0;
  for (auto at = svg.find("<polyline"); at != std::string::npos;
       at = svg.find("<polyline", at + 1)) {
    ++polylines;
  }
  CHECK(polylines == 2);
  CHECK(svg.find(">one<") != std::string::npos);
  CHECK(svg.find(">two<") != std::string::npos);

  CHECK_THROWS_AS((void)render_lines_svg({}), Error);
  CHECK_THROWS_AS((void)render_lines_svg({{"empty", {}}}), Error);
}

TEST_CASE("degenerate single-point frame stays finite") {
  std::vector<ScatterPoint> one{{2.0, 3.0, 0, false}};
  const auto svg = render_scatter_svg(one);
  CHECK(svg.find("nan") == std::string::npos);
  CHECK(svg.find("inf") == std::string::npos);
}

}  // TEST_SUITE
