#include "fk/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace fk {

namespace {

constexpr double kWidth = 640;
constexpr double kHeight = 420;
constexpr double kLeft = 62;
constexpr double kRight = 18;
constexpr double kTop = 34;
constexpr double kBottom = 46;

const char* kPalette[] = {"#4472c4", "#ed7d31", "#70ad47",
                          "#7030a0", "#c00000", "#264478"};

std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct Range {
  double lo = 0.0;
  double hi = 1.0;
};

Range find_range(const std::vector<PlotSeries>& series,
                 const std::vector<HLine>& hlines, bool use_y) {
  Range r;
  bool any = false;
  auto feed = [&](double v) {
    if (!std::isfinite(v)) return;
    if (!any) {
      r.lo = r.hi = v;
      any = true;
    } else {
      r.lo = std::min(r.lo, v);
      r.hi = std::max(r.hi, v);
    }
  };
  for (const auto& s : series) {
    for (double v : use_y ? s.y : s.x) feed(v);
  }
  if (use_y) {
    for (const auto& h : hlines) feed(h.y);
  }
  if (!any) {
    r = {0.0, 1.0};
  }
  if (r.hi == r.lo) {
    r.lo -= 0.5;
    r.hi += 0.5;
  }
  const double pad = 0.05 * (r.hi - r.lo);
  r.lo -= pad;
  r.hi += pad;
  return r;
}

std::string star_path(double cx, double cy, double rad) {
  std::string d;
  for (int i = 0; i < 5; ++i) {
    const double a = -1.5707963267948966 + i * 2.5132741228718345;
    const double b = a + 1.2566370614359172;
    const double x1 = cx + rad * std::cos(a);
    const double y1 = cy + rad * std::sin(a);
    const double x2 = cx + 0.4 * rad * std::cos(b);
    const double y2 = cy + 0.4 * rad * std::sin(b);
    d += (i == 0 ? "M" : "L") + num(x1) + " " + num(y1) + "L" + num(x2) + " " +
         num(y2);
  }
  return d + "Z";
}

}  // namespace

std::string render_plot_svg(const std::string& title,
                            const std::string& x_label,
                            const std::string& y_label,
                            const std::vector<PlotSeries>& series,
                            const std::vector<HLine>& hlines) {
  const Range rx = find_range(series, hlines, false);
  const Range ry = find_range(series, hlines, true);
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  auto px = [&](double v) {
    return kLeft + (v - rx.lo) / (rx.hi - rx.lo) * plot_w;
  };
  auto py = [&](double v) {
    return kTop + plot_h - (v - ry.lo) / (ry.hi - ry.lo) * plot_h;
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(kWidth) +
         "\" height=\"" + num(kHeight) + "\" viewBox=\"0 0 " + num(kWidth) +
         " " + num(kHeight) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + num(kWidth / 2) +
         "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"14\">" + title + "</text>\n";

  // axes + ticks
  svg += "<rect x=\"" + num(kLeft) + "\" y=\"" + num(kTop) + "\" width=\"" +
         num(plot_w) + "\" height=\"" + num(plot_h) +
         "\" fill=\"none\" stroke=\"#333\"/>\n";
  const int ticks = 5;
  for (int t = 0; t <= ticks; ++t) {
    const double fx = rx.lo + (rx.hi - rx.lo) * t / ticks;
    const double fy = ry.lo + (ry.hi - ry.lo) * t / ticks;
    const double gx = px(fx);
    const double gy = py(fy);
    svg += "<line x1=\"" + num(gx) + "\" y1=\"" + num(kTop + plot_h) +
           "\" x2=\"" + num(gx) + "\" y2=\"" + num(kTop + plot_h + 5) +
           "\" stroke=\"#333\"/>\n";
    svg += "<text x=\"" + num(gx) + "\" y=\"" + num(kTop + plot_h + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"10\">" + num(fx) + "</text>\n";
    svg += "<line x1=\"" + num(kLeft - 5) + "\" y1=\"" + num(gy) + "\" x2=\"" +
           num(kLeft) + "\" y2=\"" + num(gy) + "\" stroke=\"#333\"/>\n";
    svg += "<text x=\"" + num(kLeft - 8) + "\" y=\"" + num(gy + 3) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" "
           "font-size=\"10\">" + num(fy) + "</text>\n";
  }
  svg += "<text x=\"" + num(kLeft + plot_w / 2) + "\" y=\"" +
         num(kHeight - 10) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">" + x_label + "</text>\n";
  svg += "<text x=\"16\" y=\"" + num(kTop + plot_h / 2) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\" transform=\"rotate(-90 16 " +
         num(kTop + plot_h / 2) + ")\">" + y_label + "</text>\n";

  for (const auto& h : hlines) {
    svg += "<line x1=\"" + num(kLeft) + "\" y1=\"" + num(py(h.y)) +
           "\" x2=\"" + num(kLeft + plot_w) + "\" y2=\"" + num(py(h.y)) +
           "\" stroke=\"#c00000\" stroke-dasharray=\"5 3\"/>\n";
    if (!h.label.empty()) {
      svg += "<text x=\"" + num(kLeft + plot_w - 4) + "\" y=\"" +
             num(py(h.y) - 4) +
             "\" text-anchor=\"end\" font-family=\"sans-serif\" "
             "font-size=\"10\" fill=\"#c00000\">" + h.label + "</text>\n";
    }
  }

  for (std::size_t si = 0; si < series.size(); ++si) {
    const PlotSeries& s = series[si];
    const char* color = kPalette[si % 6];
    if (s.line && s.x.size() > 1) {
      std::string pts;
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        pts += num(px(s.x[i])) + "," + num(py(s.y[i])) + " ";
      }
      svg += "<polyline points=\"" + pts +
             "\" fill=\"none\" stroke-width=\"1.5\" stroke=\"" + color +
             "\"/>\n";
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (s.marker == Marker::dot) {
        svg += "<circle cx=\"" + num(px(s.x[i])) + "\" cy=\"" +
               num(py(s.y[i])) + "\" r=\"3\" fill=\"" + color + "\"/>\n";
      } else if (s.marker == Marker::star) {
        svg += "<path d=\"" + star_path(px(s.x[i]), py(s.y[i]), 5) +
               "\" fill=\"" + color + "\"/>\n";
      }
    }
    // legend
    const double ly = kTop + 14 + 16 * static_cast<double>(si);
    svg += "<rect x=\"" + num(kLeft + 8) + "\" y=\"" + num(ly - 8) +
           "\" width=\"10\" height=\"10\" fill=\"" + color + "\"/>\n";
    svg += "<text x=\"" + num(kLeft + 22) + "\" y=\"" + num(ly + 1) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + s.label +
           "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace fk
