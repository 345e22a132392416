#include "alpinn/harness/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

namespace alpinn::harness {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 190.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 70.0;

const std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                             "#9467bd", "#8c564b", "#e377c2", "#17becf"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  if (v != 0.0 && (std::fabs(v) < 1e-2 || std::fabs(v) >= 1e4)) {
    std::snprintf(buf, sizeof buf, "%.0e", v);
  } else {
    std::snprintf(buf, sizeof buf, "%g", v);
  }
  return buf;
}

std::string escape(const std::string& s) {
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

std::string header(double w, double h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fmt(w) + "\" height=\"" + fmt(h) +
         "\" viewBox=\"0 0 " + fmt(w) + " " + fmt(h) + "\" font-family=\"sans-serif\" font-size=\"12\">\n" +
         "<rect x=\"0\" y=\"0\" width=\"" + fmt(w) + "\" height=\"" + fmt(h) + "\" fill=\"white\"/>\n";
}

std::string text(double x, double y, const std::string& s, const char* anchor = "middle", double rotate = 0.0,
                 int size = 12) {
  std::string out = "<text x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" text-anchor=\"" + anchor + "\"";
  if (size != 12) out += " font-size=\"" + std::to_string(size) + "\"";
  if (rotate != 0.0) out += " transform=\"rotate(" + fmt(rotate) + " " + fmt(x) + " " + fmt(y) + ")\"";
  return out + ">" + escape(s) + "</text>\n";
}

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;

  double unit(double v) const {
    const double a = log ? std::log10(v) : v;
    return hi > lo ? (a - lo) / (hi - lo) : 0.5;
  }
  bool usable(double v) const { return std::isfinite(v) && (!log || v > 0.0); }

  std::vector<double> ticks() const {
    std::vector<double> out;
    if (log) {
      const int first = static_cast<int>(std::ceil(lo - 1e-9));
      const int last = static_cast<int>(std::floor(hi + 1e-9));
      const int step = std::max(1, (last - first + 1) / 8 + 1);
      for (int e = first; e <= last; e += step) out.push_back(std::pow(10.0, e));
      if (out.empty()) out.push_back(std::pow(10.0, 0.5 * (lo + hi)));
      return out;
    }
    const double span = hi - lo;
    const double raw = span / 5.0;
    const double mag = std::pow(10.0, std::floor(std::log10(raw)));
    double step = mag;
    for (double m : {1.0, 2.0, 5.0, 10.0}) {
      if (m * mag >= raw) {
        step = m * mag;
        break;
      }
    }
    for (double t = std::ceil(lo / step) * step; t <= hi + 1e-9 * span; t += step) {
      out.push_back(std::fabs(t) < 1e-12 * span ? 0.0 : t);
    }
    return out;
  }
};

Axis fit_axis(const std::vector<double>& values, bool log) {
  Axis a;
  a.log = log;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : values) {
    if (!a.usable(v)) continue;
    const double t = log ? std::log10(v) : v;
    lo = std::min(lo, t);
    hi = std::max(hi, t);
  }
  if (!(lo <= hi)) return a;
  if (hi - lo < 1e-12) {
    const double pad = log ? 0.5 : std::max(1e-12, std::fabs(lo) * 0.1 + 0.5);
    lo -= pad;
    hi += pad;
  } else if (!log) {
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  } else {
    lo = std::floor(lo * 4.0) / 4.0;
    hi = std::ceil(hi * 4.0) / 4.0;
  }
  a.lo = lo;
  a.hi = hi;
  return a;
}

// viridis sampled at 9 stops
std::array<double, 3> colormap(double t) {
  static const double stops[9][3] = {{68, 1, 84},    {71, 44, 122},  {59, 81, 139},  {44, 113, 142}, {33, 144, 141},
                                     {39, 173, 129}, {92, 200, 99},  {170, 220, 50}, {253, 231, 37}};
  t = std::clamp(std::isfinite(t) ? t : 0.0, 0.0, 1.0) * 8.0;
  const int i = std::min(7, static_cast<int>(t));
  const double f = t - i;
  return {stops[i][0] + f * (stops[i + 1][0] - stops[i][0]), stops[i][1] + f * (stops[i + 1][1] - stops[i][1]),
          stops[i][2] + f * (stops[i + 1][2] - stops[i][2])};
}

std::string hex_color(const std::array<double, 3>& c) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(std::lround(c[0])),
                static_cast<int>(std::lround(c[1])), static_cast<int>(std::lround(c[2])));
  return buf;
}

}  // namespace

std::string render_line_chart(const LineChart& chart) {
  std::vector<double> xs, ys;
  Axis probe_x{0, 1, chart.log_x}, probe_y{0, 1, chart.log_y};
  for (const auto& s : chart.series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("line chart: series '" + s.label + "' has ragged data");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!probe_x.usable(s.x[i]) || !probe_y.usable(s.y[i])) continue;
      xs.push_back(s.x[i]);
      ys.push_back(s.y[i]);
      if (i < s.y_err.size() && std::isfinite(s.y_err[i])) {
        ys.push_back(s.y[i] + s.y_err[i]);
        if (s.y[i] - s.y_err[i] > 0.0 || !chart.log_y) ys.push_back(s.y[i] - s.y_err[i]);
      }
    }
  }
  if (xs.empty()) throw std::invalid_argument("line chart '" + chart.title + "': no plottable points");
  const Axis ax = fit_axis(xs, chart.log_x);
  const Axis ay = fit_axis(ys, chart.log_y);
  const double pw = kWidth - kLeft - kRight;
  const double ph = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + ax.unit(v) * pw; };
  auto py = [&](double v) { return kTop + (1.0 - ay.unit(v)) * ph; };

  std::string out = header(kWidth, kHeight);
  out += text(kWidth / 2 - (kRight - kLeft) / 2, 24, chart.title, "middle", 0.0, 14);
  out += "<rect x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kTop) + "\" width=\"" + fmt(pw) + "\" height=\"" + fmt(ph) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double t : ax.ticks()) {
    const double x = px(t);
    out += "<line x1=\"" + fmt(x) + "\" y1=\"" + fmt(kTop + ph) + "\" x2=\"" + fmt(x) + "\" y2=\"" + fmt(kTop + ph + 5) +
           "\" stroke=\"black\"/>\n";
    out += text(x, kTop + ph + 18, tick_label(t));
  }
  for (double t : ay.ticks()) {
    const double y = py(t);
    out += "<line x1=\"" + fmt(kLeft - 5) + "\" y1=\"" + fmt(y) + "\" x2=\"" + fmt(kLeft + pw) + "\" y2=\"" + fmt(y) +
           "\" stroke=\"#dddddd\"/>\n";
    out += text(kLeft - 8, y + 4, tick_label(t), "end");
  }
  out += text(kLeft + pw / 2, kHeight - 30, chart.x_label);
  out += text(20, kTop + ph / 2, chart.y_label, "middle", -90.0);
  if (!chart.note.empty()) out += text(kLeft + pw / 2, kHeight - 10, chart.note, "middle", 0.0, 10);

  for (std::size_t k = 0; k < chart.series.size(); ++k) {
    const Series& s = chart.series[k];
    const std::string color = kPalette[k % kPalette.size()];
    std::string points;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!ax.usable(s.x[i]) || !ay.usable(s.y[i])) continue;
      points += (points.empty() ? "" : " ") + fmt(px(s.x[i])) + "," + fmt(py(s.y[i]));
      if (i < s.y_err.size() && std::isfinite(s.y_err[i])) {
        const double lo = s.y[i] - s.y_err[i];
        const double y_lo = ay.usable(lo) ? py(lo) : kTop + ph;
        out += "<line x1=\"" + fmt(px(s.x[i])) + "\" y1=\"" + fmt(py(s.y[i] + s.y_err[i])) + "\" x2=\"" +
               fmt(px(s.x[i])) + "\" y2=\"" + fmt(y_lo) + "\" stroke=\"" + color + "\"/>\n";
      }
      if (chart.markers) {
        out += "<circle cx=\"" + fmt(px(s.x[i])) + "\" cy=\"" + fmt(py(s.y[i])) + "\" r=\"3\" fill=\"" + color +
               "\"/>\n";
      }
    }
    out += "<polyline class=\"series\" data-label=\"" + escape(s.label) + "\" fill=\"none\" stroke=\"" + color +
           "\" stroke-width=\"1.5\" points=\"" + points + "\"/>\n";
    const double ly = kTop + 10 + 18.0 * static_cast<double>(k);
    out += "<line x1=\"" + fmt(kLeft + pw + 12) + "\" y1=\"" + fmt(ly) + "\" x2=\"" + fmt(kLeft + pw + 36) +
           "\" y2=\"" + fmt(ly) + "\" stroke=\"" + color + "\" stroke-width=\"2\"/>\n";
    out += text(kLeft + pw + 42, ly + 4, s.label, "start");
  }
  return out + "</svg>\n";
}

std::string render_heatmap(const Heatmap& map) {
  const std::size_t n = map.value.size();
  if (n == 0 || map.x.size() != n || map.y.size() != n) {
    throw std::invalid_argument("heatmap '" + map.title + "': needs equal, nonempty x, y and value columns");
  }
  auto distinct = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
  };
  const std::vector<double> xs = distinct(map.x);
  const std::vector<double> ys = distinct(map.y);
  double vmin = std::numeric_limits<double>::infinity();
  double vmax = -vmin;
  for (double v : map.value) {
    if (!std::isfinite(v)) continue;
    vmin = std::min(vmin, v);
    vmax = std::max(vmax, v);
  }
  if (!(vmin <= vmax)) vmin = vmax = 0.0;
  const double span = vmax > vmin ? vmax - vmin : 1.0;

  const double size = 400.0;
  const double w = kLeft + size + 140.0;
  const double h = kTop + size + kBottom;
  const double cw = size / static_cast<double>(xs.size());
  const double ch = size / static_cast<double>(ys.size());
  std::string out = header(w, h);
  out += text(kLeft + size / 2, 24, map.title, "middle", 0.0, 14);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ix = static_cast<double>(std::lower_bound(xs.begin(), xs.end(), map.x[i]) - xs.begin());
    const auto iy = static_cast<double>(std::lower_bound(ys.begin(), ys.end(), map.y[i]) - ys.begin());
    const double x = kLeft + ix * cw;
    const double y = kTop + size - (iy + 1.0) * ch;
    out += "<rect class=\"cell\" x=\"" + fmt(x) + "\" y=\"" + fmt(y) + "\" width=\"" + fmt(cw + 0.02) +
           "\" height=\"" + fmt(ch + 0.02) + "\" fill=\"" + hex_color(colormap((map.value[i] - vmin) / span)) +
           "\"/>\n";
  }
  out += "<rect x=\"" + fmt(kLeft) + "\" y=\"" + fmt(kTop) + "\" width=\"" + fmt(size) + "\" height=\"" + fmt(size) +
         "\" fill=\"none\" stroke=\"black\"/>\n";
  const auto axis_labels = [&](const std::vector<double>& v, bool horizontal) {
    std::string s;
    const double lo = v.front();
    const double hi = v.back();
    for (int k = 0; k <= 4; ++k) {
      const double t = lo + (hi - lo) * k / 4.0;
      if (horizontal) {
        s += text(kLeft + (k / 4.0) * size, kTop + size + 18, tick_label(t));
      } else {
        s += text(kLeft - 8, kTop + size - (k / 4.0) * size + 4, tick_label(t), "end");
      }
    }
    return s;
  };
  out += axis_labels(xs, true);
  out += axis_labels(ys, false);
  out += text(kLeft + size / 2, kTop + size + 45, map.x_label);
  out += text(25, kTop + size / 2, map.y_label, "middle", -90.0);

  out += "<defs><linearGradient id=\"legend\" x1=\"0\" y1=\"1\" x2=\"0\" y2=\"0\">\n";
  for (int k = 0; k <= 8; ++k) {
    out += "<stop offset=\"" + fmt(k / 8.0) + "\" stop-color=\"" + hex_color(colormap(k / 8.0)) + "\"/>\n";
  }
  out += "</linearGradient></defs>\n";
  const double lx = kLeft + size + 30;
  out += "<rect class=\"legend\" x=\"" + fmt(lx) + "\" y=\"" + fmt(kTop) + "\" width=\"20\" height=\"" + fmt(size) +
         "\" fill=\"url(#legend)\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = vmin + (vmax - vmin) * k / 4.0;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    out += text(lx + 26, kTop + size - (k / 4.0) * size + 4, buf, "start");
  }
  out += text(lx + 10, kTop - 10, map.value_label);
  return out + "</svg>\n";
}

}  // namespace alpinn::harness
