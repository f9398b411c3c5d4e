#pragma once

#include <string>
#include <vector>

namespace chainlab {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool markers = true;
};

struct PlotSpec {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool logx = false;
  bool logy = false;
  std::vector<PlotSeries> series;
};

// Self-contained SVG, byte-identical for identical input. Log axes drop
// nonpositive points; a series that loses all its points is drawn as legend
// only.
std::string render_svg_plot(const PlotSpec& spec);

}  // namespace chainlab
