#include "tcprof/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace tcprof {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 420;
constexpr int kMarginLeft = 60;
constexpr int kMarginRight = 150;  // legend gutter
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 50;

const char* kPalette[] = {"#d62728", "#2ca02c", "#1f77b4", "#e8a000", "#9467bd", "#8c564b"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
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

double nice_step(double range, int target_ticks) {
  double raw = range / std::max(1, target_ticks);
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (raw <= m * mag) return m * mag;
  }
  return 10.0 * mag;
}

}  // namespace

std::string render_profile_chart(const std::string& title,
                                 const std::vector<ChartSeries>& series) {
  if (series.empty()) throw std::invalid_argument("render_profile_chart: no series");
  for (const auto& s : series) {
    if (s.radii_km.size() != s.winds_kt.size() || s.radii_km.empty()) {
      throw std::invalid_argument("render_profile_chart: series '" + s.name +
                                  "' has mismatched or empty data");
    }
  }

  double xmax = 0.0, ymax = 0.0;
  for (const auto& s : series) {
    for (double r : s.radii_km) xmax = std::max(xmax, r);
    for (double w : s.winds_kt) ymax = std::max(ymax, w);
  }
  if (xmax <= 0.0) xmax = 1.0;
  ymax = std::max(ymax * 1.1, 10.0);

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto px = [&](double r) { return kMarginLeft + r / xmax * plot_w; };
  auto py = [&](double w) { return kMarginTop + (1.0 - w / ymax) * plot_h; };

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
      << "<rect width=\"" << kWidth << "\" height=\"" << kHeight << "\" fill=\"white\"/>\n"
      << "<text x=\"" << kMarginLeft << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"16\">"
      << xml_escape(title) << "</text>\n";

  // axes
  svg << "<g class=\"axes\" stroke=\"#333\" stroke-width=\"1\">\n"
      << "<line x1=\"" << kMarginLeft << "\" y1=\"" << py(0) << "\" x2=\"" << px(xmax)
      << "\" y2=\"" << py(0) << "\"/>\n"
      << "<line x1=\"" << kMarginLeft << "\" y1=\"" << py(0) << "\" x2=\"" << kMarginLeft
      << "\" y2=\"" << kMarginTop << "\"/>\n</g>\n";

  svg << "<g class=\"ticks\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#333\">\n";
  double xstep = nice_step(xmax, 6);
  for (double r = 0.0; r <= xmax + 1e-9; r += xstep) {
    svg << "<line x1=\"" << px(r) << "\" y1=\"" << py(0) << "\" x2=\"" << px(r) << "\" y2=\""
        << py(0) + 4 << "\" stroke=\"#333\"/>"
        << "<text x=\"" << px(r) << "\" y=\"" << py(0) + 18 << "\" text-anchor=\"middle\">"
        << static_cast<long>(std::lround(r)) << "</text>\n";
  }
  double ystep = nice_step(ymax, 6);
  for (double w = 0.0; w <= ymax + 1e-9; w += ystep) {
    svg << "<line x1=\"" << kMarginLeft - 4 << "\" y1=\"" << py(w) << "\" x2=\"" << kMarginLeft
        << "\" y2=\"" << py(w) << "\" stroke=\"#333\"/>"
        << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << py(w) + 4
        << "\" text-anchor=\"end\">" << static_cast<long>(std::lround(w)) << "</text>\n";
  }
  svg << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << kHeight - 10
      << "\" text-anchor=\"middle\">radius (km)</text>\n"
      << "<text x=\"16\" y=\"" << kMarginTop + plot_h / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 " << kMarginTop + plot_h / 2
      << ")\">wind (kt)</text>\n</g>\n";

  // one path per series
  for (size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
    std::ostringstream d;
    for (size_t k = 0; k < s.radii_km.size(); ++k) {
      d << (k == 0 ? "M" : " L") << fmt(px(s.radii_km[k])) << ' ' << fmt(py(s.winds_kt[k]));
    }
    svg << "<path class=\"series\" d=\"" << d.str() << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.8\"/>\n";
  }

  // legend from series names
  double lx = kWidth - kMarginRight + 12, ly = kMarginTop + 8;
  svg << "<g class=\"legend\" font-family=\"sans-serif\" font-size=\"12\">\n";
  for (size_t i = 0; i < series.size(); ++i) {
    const char* color = kPalette[i % (sizeof(kPalette) / sizeof(kPalette[0]))];
    svg << "<line x1=\"" << lx << "\" y1=\"" << ly + 18.0 * i << "\" x2=\"" << lx + 20
        << "\" y2=\"" << ly + 18.0 * i << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>"
        << "<text x=\"" << lx + 26 << "\" y=\"" << ly + 18.0 * i + 4 << "\">"
        << xml_escape(series[i].name) << "</text>\n";
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

}  // namespace tcprof
