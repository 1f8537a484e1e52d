#include <algorithm>
#include <cmath>
#include <sstream>

#include "gpm/io.hpp"

namespace gpm {
namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 55.0;

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  std::ostringstream ss;
  ss.precision(6);
  ss << v;
  return ss.str();
}

struct Frame {
  double x0, x1, y0, y1;
  bool log_x, log_y;

  double tx(double x) const {
    const double u = log_x ? std::log10(x) : x;
    return kLeft + (u - x0) / (x1 - x0) * (kWidth - kLeft - kRight);
  }
  double ty(double y) const {
    const double u = log_y ? std::log10(y) : y;
    return kHeight - kBottom - (u - y0) / (y1 - y0) * (kHeight - kTop - kBottom);
  }
  bool usable(double x, double y) const {
    return std::isfinite(x) && std::isfinite(y) && (!log_x || x > 0) && (!log_y || y > 0);
  }
};

void widen(double& lo, double& hi) {
  if (!(hi > lo)) {
    const double pad = std::abs(lo) > 0 ? 0.1 * std::abs(lo) : 1.0;
    lo -= pad;
    hi += pad;
  }
}

Frame make_frame(const SvgAxes& axes, const std::vector<double>& xs, const std::vector<double>& ys, bool y_from_zero) {
  Frame f{INFINITY, -INFINITY, INFINITY, -INFINITY, axes.log_x, axes.log_y};
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!f.usable(xs[i], ys[i])) continue;
    const double u = axes.log_x ? std::log10(xs[i]) : xs[i];
    const double v = axes.log_y ? std::log10(ys[i]) : ys[i];
    f.x0 = std::min(f.x0, u);
    f.x1 = std::max(f.x1, u);
    f.y0 = std::min(f.y0, v);
    f.y1 = std::max(f.y1, v);
  }
  if (!std::isfinite(f.x0)) f = Frame{0, 1, 0, 1, axes.log_x, axes.log_y};
  if (y_from_zero && !axes.log_y) f.y0 = std::min(f.y0, 0.0);
  widen(f.x0, f.x1);
  widen(f.y0, f.y1);
  return f;
}

void header(std::ostringstream& out, const SvgAxes& axes, const Frame& f) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(axes.title)
      << "</text>\n";
  const double bx = kHeight - kBottom;
  out << "<line x1=\"" << kLeft << "\" y1=\"" << bx << "\" x2=\"" << kWidth - kRight << "\" y2=\"" << bx
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft << "\" y2=\"" << bx
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double u = f.x0 + (f.x1 - f.x0) * i / 4.0;
    const double v = f.y0 + (f.y1 - f.y0) * i / 4.0;
    const double px = kLeft + (kWidth - kLeft - kRight) * i / 4.0;
    const double py = bx - (kHeight - kTop - kBottom) * i / 4.0;
    out << "<text x=\"" << px << "\" y=\"" << bx + 15 << "\" text-anchor=\"middle\">"
        << num(f.log_x ? std::pow(10.0, u) : u) << "</text>\n";
    out << "<text x=\"" << kLeft - 5 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">"
        << num(f.log_y ? std::pow(10.0, v) : v) << "</text>\n";
  }
  out << "<text x=\"" << kWidth / 2 << "\" y=\"" << kHeight - 12 << "\" text-anchor=\"middle\">"
      << escape(axes.x_label) << "</text>\n";
  out << "<text transform=\"translate(16," << kHeight / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
      << escape(axes.y_label) << "</text>\n";
}

void polylines(std::ostringstream& out, const Frame& f, const std::vector<SvgSeries>& series) {
  int legend = 0;
  for (const SvgSeries& s : series) {
    out << "<polyline fill=\"none\" stroke=\"" << s.colour << "\" stroke-width=\"" << s.width
        << "\" stroke-opacity=\"" << s.opacity << "\"" << (s.dashed ? " stroke-dasharray=\"5,3\"" : "")
        << " points=\"";
    const std::size_t n = std::min(s.x.size(), s.y.size());
    for (std::size_t i = 0; i < n; ++i) {
      if (!f.usable(s.x[i], s.y[i])) continue;
      out << num(f.tx(s.x[i])) << ',' << num(f.ty(s.y[i])) << ' ';
    }
    out << "\"/>\n";
    if (!s.label.empty()) {
      const double y = kTop + 12.0 * legend++;
      out << "<text x=\"" << kWidth - kRight - 5 << "\" y=\"" << y << "\" text-anchor=\"end\" fill=\"" << s.colour
          << "\">" << escape(s.label) << "</text>\n";
    }
  }
}

}  // namespace

std::string svg_lines(const SvgAxes& axes, const std::vector<SvgSeries>& series) {
  std::vector<double> xs, ys;
  for (const SvgSeries& s : series) {
    const std::size_t n = std::min(s.x.size(), s.y.size());
    xs.insert(xs.end(), s.x.begin(), s.x.begin() + static_cast<std::ptrdiff_t>(n));
    ys.insert(ys.end(), s.y.begin(), s.y.begin() + static_cast<std::ptrdiff_t>(n));
  }
  const Frame f = make_frame(axes, xs, ys, false);
  std::ostringstream out;
  header(out, axes, f);
  polylines(out, f, series);
  out << "</svg>\n";
  return out.str();
}

std::string svg_bars(const SvgAxes& axes, const std::vector<double>& x, const std::vector<double>& heights) {
  SvgAxes flat = axes;
  flat.log_x = flat.log_y = false;
  std::vector<double> xs = x;
  if (!x.empty()) {
    xs.push_back(x.front() - 0.5);
    xs.push_back(x.back() + 0.5);
  }
  std::vector<double> ys = heights;
  ys.resize(xs.size(), 0.0);
  const Frame f = make_frame(flat, xs, ys, true);
  std::ostringstream out;
  header(out, flat, f);
  const double half = 0.4 * (f.tx(1.0) - f.tx(0.0));
  for (std::size_t i = 0; i < std::min(x.size(), heights.size()); ++i) {
    const double top = f.ty(heights[i]);
    out << "<rect x=\"" << num(f.tx(x[i]) - half) << "\" y=\"" << num(top) << "\" width=\"" << num(2 * half)
        << "\" height=\"" << num(f.ty(0.0) - top) << "\" fill=\"#1f77b4\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string svg_histogram(const SvgAxes& axes, const std::vector<double>& values, int n_bins,
                          const std::vector<SvgSeries>& overlay) {
  SvgAxes flat = axes;
  flat.log_x = flat.log_y = false;
  std::vector<double> finite;
  for (double v : values) {
    if (std::isfinite(v)) finite.push_back(v);
  }
  n_bins = std::max(n_bins, 1);
  double lo = 0.0, hi = 1.0;
  if (!finite.empty()) {
    lo = *std::min_element(finite.begin(), finite.end());
    hi = *std::max_element(finite.begin(), finite.end());
    widen(lo, hi);
  }
  const double width = (hi - lo) / n_bins;
  std::vector<double> density(static_cast<std::size_t>(n_bins), 0.0);
  for (double v : finite) {
    const int b = std::clamp(static_cast<int>((v - lo) / width), 0, n_bins - 1);
    density[static_cast<std::size_t>(b)] += 1.0;
  }
  for (double& d : density) d /= std::max<std::size_t>(finite.size(), 1) * width;

  std::vector<double> xs{lo, hi}, ys{0.0, 0.0};
  for (double d : density) {
    xs.push_back(lo);
    ys.push_back(d);
  }
  for (const SvgSeries& s : overlay) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (s.x[i] >= lo && s.x[i] <= hi) {
        xs.push_back(s.x[i]);
        ys.push_back(s.y[i]);
      }
    }
  }
  const Frame f = make_frame(flat, xs, ys, true);
  std::ostringstream out;
  header(out, flat, f);
  for (int b = 0; b < n_bins; ++b) {
    const double x0 = f.tx(lo + b * width);
    const double x1 = f.tx(lo + (b + 1) * width);
    const double top = f.ty(density[static_cast<std::size_t>(b)]);
    out << "<rect x=\"" << num(x0) << "\" y=\"" << num(top) << "\" width=\"" << num(x1 - x0) << "\" height=\""
        << num(f.ty(0.0) - top) << "\" fill=\"#aec7e8\" stroke=\"white\" stroke-width=\"0.5\"/>\n";
  }
  polylines(out, f, overlay);
  out << "</svg>\n";
  return out.str();
}

}  // namespace gpm
