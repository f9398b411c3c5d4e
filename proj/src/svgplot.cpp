#include "chainlab/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace chainlab {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 64.0;
constexpr double kRight = 612.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 372.0;

const char* kPalette[] = {"#1f6feb", "#d1242f", "#2da44e", "#bf8700",
                          "#8250df", "#116329", "#953800", "#57606a"};
constexpr int kPaletteSize = 8;

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string fmt_tick(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  void admit(double v) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  bool empty() const { return !(lo <= hi); }
  void pad() {
    if (empty()) {
      lo = 0.0;
      hi = 1.0;
    } else if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
      double c = 0.5 * (lo + hi);
      double h = std::max(0.5, 0.05 * std::abs(c));
      lo = c - h;
      hi = c + h;
    } else {
      double m = 0.05 * (hi - lo);
      lo -= m;
      hi += m;
    }
  }
};

double transform(double v, bool logscale) { return logscale ? std::log10(v) : v; }

bool plottable(double v, bool logscale) {
  return std::isfinite(v) && (!logscale || v > 0.0);
}

std::vector<double> axis_ticks(const Range& r, bool logscale) {
  std::vector<double> ticks;
  if (logscale) {
    int d0 = static_cast<int>(std::ceil(r.lo - 1e-9));
    int d1 = static_cast<int>(std::floor(r.hi + 1e-9));
    int step = std::max(1, (d1 - d0) / 6 + ((d1 - d0) % 6 ? 1 : 0));
    for (int d = d0; d <= d1; d += step) ticks.push_back(static_cast<double>(d));
    if (ticks.empty()) ticks.push_back(0.5 * (r.lo + r.hi));
    return ticks;
  }
  double span = r.hi - r.lo;
  double raw = span / 5.0;
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0}) {
    if (mag * m >= raw) {
      step = mag * m;
      break;
    }
  }
  double first = std::ceil(r.lo / step) * step;
  for (double v = first; v <= r.hi + 1e-9 * step; v += step) {
    ticks.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  }
  return ticks;
}

}  // namespace

std::string render_svg_plot(const PlotSpec& spec) {
  Range rx, ry;
  for (const auto& s : spec.series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (plottable(s.x[i], spec.logx) && plottable(s.y[i], spec.logy)) {
        rx.admit(transform(s.x[i], spec.logx));
        ry.admit(transform(s.y[i], spec.logy));
      }
    }
  }
  rx.pad();
  ry.pad();

  auto px = [&](double v) {
    return kLeft + (kRight - kLeft) * (transform(v, spec.logx) - rx.lo) / (rx.hi - rx.lo);
  };
  auto py = [&](double v) {
    return kBottom - (kBottom - kTop) * (transform(v, spec.logy) - ry.lo) / (ry.hi - ry.lo);
  };

  std::string out;
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(kWidth) + "\" height=\"" +
         fmt(kHeight) + "\" viewBox=\"0 0 " + fmt(kWidth) + " " + fmt(kHeight) + "\">\n";
  out += "<rect x=\"0\" y=\"0\" width=\"" + fmt(kWidth) + "\" height=\"" + fmt(kHeight) +
         "\" fill=\"#ffffff\"/>\n";
  out += "<text x=\"" + fmt(0.5 * kWidth) + "\" y=\"22\" text-anchor=\"middle\" " +
         "font-family=\"sans-serif\" font-size=\"15\" fill=\"#24292f\">" +
         escape_xml(spec.title) + "</text>\n";

  for (double t : axis_ticks(rx, spec.logx)) {
    double x = kLeft + (kRight - kLeft) * (t - rx.lo) / (rx.hi - rx.lo);
    if (x < kLeft - 0.5 || x > kRight + 0.5) continue;
    out += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(kTop) + "\" x2=\"" + fmt(x) + "\" y2=\"" +
           fmt(kBottom) + "\" stroke=\"#d0d7de\" stroke-width=\"0.5\"/>\n";
    double value = spec.logx ? std::pow(10.0, t) : t;
    out += "<text x=\"" + fmt(x) + "\" y=\"" + fmt(kBottom + 16.0) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\" "
           "fill=\"#57606a\">" +
           fmt_tick(value) + "</text>\n";
  }
  for (double t : axis_ticks(ry, spec.logy)) {
    double y = kBottom - (kBottom - kTop) * (t - ry.lo) / (ry.hi - ry.lo);
    if (y < kTop - 0.5 || y > kBottom + 0.5) continue;
    out += "<line x1=\"" + fmt(kLeft) + "\" y1=\"" + fmt(y) + "\" x2=\"" + fmt(kRight) +
           "\" y2=\"" + fmt(y) + "\" stroke=\"#d0d7de\" stroke-width=\"0.5\"/>\n";
    double value = spec.logy ? std::pow(10.0, t) : t;
    out += "<text x=\"" + fmt(kLeft - 6.0) + "\" y=\"" + fmt(y + 3.5) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\" "
           "fill=\"#57606a\">" +
           fmt_tick(value) + "</text>\n";
  }

  out += "<rect x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kTop) + "\" width=\"" + fmt(kRight - kLeft) +
         "\" height=\"" + fmt(kBottom - kTop) +
         "\" fill=\"none\" stroke=\"#57606a\" stroke-width=\"1\"/>\n";
  out += "<text x=\"" + fmt(0.5 * (kLeft + kRight)) + "\" y=\"" + fmt(kHeight - 8.0) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "fill=\"#24292f\">" +
         escape_xml(spec.xlabel) + "</text>\n";
  out += "<text x=\"16\" y=\"" + fmt(0.5 * (kTop + kBottom)) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "fill=\"#24292f\" transform=\"rotate(-90 16 " +
         fmt(0.5 * (kTop + kBottom)) + ")\">" + escape_xml(spec.ylabel) + "</text>\n";

  int color_index = 0;
  double legend_y = kTop + 14.0;
  for (const auto& s : spec.series) {
    const char* color = kPalette[color_index % kPaletteSize];
    ++color_index;
    std::string points;
    bool any = false;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!plottable(s.x[i], spec.logx) || !plottable(s.y[i], spec.logy)) continue;
      points += (any ? " " : "") + fmt(px(s.x[i])) + "," + fmt(py(s.y[i]));
      any = true;
    }
    if (any) {
      out += "<polyline fill=\"none\" stroke=\"" + std::string(color) +
             "\" stroke-width=\"1.5\"" + (s.markers ? "" : " stroke-dasharray=\"6 4\"") +
             " points=\"" + points + "\"/>\n";
      if (s.markers) {
        for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
          if (!plottable(s.x[i], spec.logx) || !plottable(s.y[i], spec.logy)) continue;
          out += "<circle cx=\"" + fmt(px(s.x[i])) + "\" cy=\"" + fmt(py(s.y[i])) +
                 "\" r=\"2.8\" fill=\"" + std::string(color) + "\"/>\n";
        }
      }
    }
    if (!s.label.empty()) {
      out += "<line x1=\"" + fmt(kRight - 150.0) + "\" y1=\"" + fmt(legend_y - 4.0) +
             "\" x2=\"" + fmt(kRight - 130.0) + "\" y2=\"" + fmt(legend_y - 4.0) +
             "\" stroke=\"" + std::string(color) + "\" stroke-width=\"2\"" +
             (s.markers ? "" : " stroke-dasharray=\"6 4\"") + "/>\n";
      out += "<text x=\"" + fmt(kRight - 124.0) + "\" y=\"" + fmt(legend_y) +
             "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#24292f\">" +
             escape_xml(s.label) + "</text>\n";
      legend_y += 15.0;
    }
  }

  out += "</svg>\n";
  return out;
}

}  // namespace chainlab
