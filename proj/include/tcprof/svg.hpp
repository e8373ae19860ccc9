#pragma once

#include <string>
#include <vector>

namespace tcprof {

// One plotted line: wind speed (kt) against radius (km). Primary series sit
// on the 5-km grid; overlays may carry arbitrary radii.
struct ChartSeries {
  std::string name;
  std::vector<double> radii_km;
  std::vector<double> winds_kt;
};

// Hand-assembled SVG line chart (axes, ticks, legend, one path per series);
// no imaging dependency, assertable as XML.
std::string render_profile_chart(const std::string& title,
                                 const std::vector<ChartSeries>& series);

}  // namespace tcprof
