#include "delocal/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "delocal/io.hpp"

namespace delocal {

namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

}  // namespace

std::string svg_plot(const std::vector<double>& x, const std::vector<double>& y, const PlotSpec& spec) {
  constexpr double W = 640, H = 420, left = 70, right = 20, top = 40, bottom = 50;
  auto tx = [&](double v) { return spec.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return spec.log_y ? std::log10(v) : v; };
  auto usable = [&](double a, double b) {
    if (!std::isfinite(a) || !std::isfinite(b)) return false;
    if (spec.log_x && a <= 0) return false;
    if (spec.log_y && b <= 0) return false;
    return true;
  };

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (!usable(x[i], y[i])) continue;
    pts.emplace_back(tx(x[i]), ty(y[i]));
    x0 = std::min(x0, pts.back().first);
    x1 = std::max(x1, pts.back().first);
    y0 = std::min(y0, pts.back().second);
    y1 = std::max(y1, pts.back().second);
  }
  if (spec.vertical && (!spec.log_x || *spec.vertical > 0)) {
    x0 = std::min(x0, tx(*spec.vertical));
    x1 = std::max(x1, tx(*spec.vertical));
  }
  if (pts.empty()) x0 = y0 = 0, x1 = y1 = 1;
  if (x1 == x0) x0 -= 0.5, x1 += 0.5;
  if (y1 == y0) y0 -= 0.5, y1 += 0.5;
  auto px = [&](double v) { return left + (v - x0) / (x1 - x0) * (W - left - right); };
  auto py = [&](double v) { return H - bottom - (v - y0) / (y1 - y0) * (H - top - bottom); };

  std::string s;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
  s += "<text x=\"320\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" + escape(spec.title) + "</text>\n";
  s += "<rect x=\"" + fixed(left) + "\" y=\"" + fixed(top) + "\" width=\"" + fixed(W - left - right) + "\" height=\"" +
       fixed(H - top - bottom) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double vx = x0 + (x1 - x0) * i / 4, vy = y0 + (y1 - y0) * i / 4;
    const double lx = spec.log_x ? std::pow(10.0, vx) : vx, ly = spec.log_y ? std::pow(10.0, vy) : vy;
    s += "<text x=\"" + fixed(px(vx)) + "\" y=\"" + fixed(H - bottom + 16) + "\" text-anchor=\"middle\">" + tick(lx) + "</text>\n";
    s += "<text x=\"" + fixed(left - 6) + "\" y=\"" + fixed(py(vy) + 4) + "\" text-anchor=\"end\">" + tick(ly) + "</text>\n";
  }
  s += "<text x=\"320\" y=\"" + fixed(H - 12) + "\" text-anchor=\"middle\">" + escape(spec.x_label) + "</text>\n";
  s += "<text x=\"16\" y=\"" + fixed(H / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " + fixed(H / 2) + ")\">" +
       escape(spec.y_label) + "</text>\n";
  if (spec.vertical && (!spec.log_x || *spec.vertical > 0)) {
    const double vx = px(tx(*spec.vertical));
    s += "<line x1=\"" + fixed(vx) + "\" y1=\"" + fixed(top) + "\" x2=\"" + fixed(vx) + "\" y2=\"" + fixed(H - bottom) +
         "\" stroke=\"firebrick\" stroke-dasharray=\"6 4\"/>\n";
    s += "<text x=\"" + fixed(vx + 4) + "\" y=\"" + fixed(top + 14) + "\" fill=\"firebrick\">" + escape(spec.vertical_label) +
         "</text>\n";
  }
  if (spec.connect && pts.size() > 1) {
    s += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.5\" points=\"";
    for (const auto& [a, b] : pts) s += fixed(px(a)) + "," + fixed(py(b)) + " ";
    s += "\"/>\n";
  }
  for (const auto& [a, b] : pts)
    s += "<circle cx=\"" + fixed(px(a)) + "\" cy=\"" + fixed(py(b)) + "\" r=\"2.5\" fill=\"steelblue\"/>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace delocal
