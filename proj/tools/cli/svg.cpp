#include "svg.hpp"

#include <algorithm>
#include <array>
#include <cstdio>

namespace pacf::cli {

namespace {

constexpr double kWidth = 560.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 60.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

constexpr std::array<const char*, 10> kPalette = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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
  double lo = 0.0;
  double hi = 1.0;
};

Range padded_range(const std::vector<ScatterPoint>& points, double ScatterPoint::*axis) {
  if (points.empty()) return {};
  Range r{points.front().*axis, points.front().*axis};
  for (const auto& p : points) {
    r.lo = std::min(r.lo, p.*axis);
    r.hi = std::max(r.hi, p.*axis);
  }
  const double pad = r.hi > r.lo ? 0.05 * (r.hi - r.lo) : 0.5;
  return {r.lo - pad, r.hi + pad};
}

}  // namespace

std::string render_svg(const ScatterPlot& plot) {
  const Range xr = padded_range(plot.points, &ScatterPoint::x);
  const Range yr = padded_range(plot.points, &ScatterPoint::y);
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto sx = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto sy = [&](double y) { return kTop + ph - (y - yr.lo) / (yr.hi - yr.lo) * ph; };

  std::string s;
  s += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(kWidth) + "\" height=\"" + fixed(kHeight) +
       "\" viewBox=\"0 0 " + fixed(kWidth) + " " + fixed(kHeight) + "\" font-family=\"sans-serif\">\n";
  s += "<title>" + escape(plot.title) + "</title>\n";
  s += "<desc>" + escape(plot.description) + "</desc>\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<rect x=\"" + fixed(kLeft) + "\" y=\"" + fixed(kTop) + "\" width=\"" + fixed(pw) + "\" height=\"" +
       fixed(ph) + "\" fill=\"none\" stroke=\"black\"/>\n";
  s += "<text x=\"" + fixed(kWidth / 2) + "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" +
       escape(plot.title) + "</text>\n";
  s += "<text x=\"" + fixed(kLeft + pw / 2) + "\" y=\"" + fixed(kHeight - 12) +
       "\" text-anchor=\"middle\" font-size=\"12\">" + escape(plot.x_label) + "</text>\n";
  s += "<text x=\"16\" y=\"" + fixed(kTop + ph / 2) + "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 " +
       fixed(kTop + ph / 2) + ")\">" + escape(plot.y_label) + "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xr.lo + (xr.hi - xr.lo) * i / 4.0;
    const double fy = yr.lo + (yr.hi - yr.lo) * i / 4.0;
    s += "<text x=\"" + fixed(sx(fx)) + "\" y=\"" + fixed(kTop + ph + 16) +
         "\" text-anchor=\"middle\" font-size=\"10\">" + tick(fx) + "</text>\n";
    s += "<text x=\"" + fixed(kLeft - 4) + "\" y=\"" + fixed(sy(fy) + 3) +
         "\" text-anchor=\"end\" font-size=\"10\">" + tick(fy) + "</text>\n";
  }
  s += "<g fill-opacity=\"0.6\">\n";
  for (const auto& p : plot.points) {
    const char* colour = kPalette[static_cast<std::size_t>(std::max(p.group, 0)) % kPalette.size()];
    s += "<circle cx=\"" + fixed(sx(p.x)) + "\" cy=\"" + fixed(sy(p.y)) + "\" r=\"2.5\" fill=\"" + colour + "\"/>\n";
  }
  s += "</g>\n";
  for (std::size_t i = 0; i < plot.notes.size(); ++i) {
    s += "<text x=\"" + fixed(kLeft + 8) + "\" y=\"" + fixed(kTop + 16 + 15.0 * static_cast<double>(i)) +
         "\" font-size=\"12\">" + escape(plot.notes[i]) + "</text>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace pacf::cli
