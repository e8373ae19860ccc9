#pragma once

#include <vector>

namespace tcprof {

// Polar grid: 180 angular rows of 2 degrees each, 103 radial columns of 5 km each.
inline constexpr int kPolarAngles = 180;
inline constexpr int kPolarRadii = 103;
inline constexpr double kDegPerAngleIndex = 2.0;
inline constexpr double kKmPerRadiusIndex = 5.0;

// Default source resolution. The outermost sampled radius (102 * 5 = 510 km)
// must stay inside the 63.5-px half-width of a 128x128 crop; 8.05 km/px does.
inline constexpr double kDefaultPixelSpacingKm = 8.05;

// Storm-centered multi-channel raster. The storm center sits at the exact
// image center ((h-1)/2, (w-1)/2). Data is channel-major (c, y, x).
struct CartesianImage {
  int channels = 0;
  int height = 0;
  int width = 0;
  double pixel_spacing_km = kDefaultPixelSpacingKm;
  std::vector<double> data;

  static CartesianImage zeros(int channels, int height, int width,
                              double pixel_spacing_km = kDefaultPixelSpacingKm);

  double& at(int c, int y, int x) { return data[(static_cast<size_t>(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const { return data[(static_cast<size_t>(c) * height + y) * width + x]; }
  double center_x() const { return (width - 1) / 2.0; }
  double center_y() const { return (height - 1) / 2.0; }
};

// Angle x radius reprojection. Data indexed (channel, angle, radius);
// angle index i is azimuth 2i degrees, radius index j is 5j km.
struct PolarImage {
  int channels = 0;
  int n_angles = kPolarAngles;
  int n_radii = kPolarRadii;
  std::vector<double> data;

  static PolarImage zeros(int channels, int n_angles = kPolarAngles, int n_radii = kPolarRadii);

  double& at(int c, int a, int r) { return data[(static_cast<size_t>(c) * n_angles + a) * n_radii + r]; }
  double at(int c, int a, int r) const { return data[(static_cast<size_t>(c) * n_angles + a) * n_radii + r]; }
};

// Bilinear interpolation at pixel coordinates (x, y). Exact at integer
// coordinates (zero-weight neighbors are skipped, so a NaN next door cannot
// poison an exact hit). Throws std::out_of_range outside [0, w-1] x [0, h-1].
double sample_bilinear(const CartesianImage& img, double x, double y, int channel = 0);

// Projects onto the polar grid. Sample points that fall outside the image are
// filled with the per-channel mean over finite pixels.
PolarImage cart_to_polar(const CartesianImage& img);

// Rotation as a circular roll of the angular axis. degrees must be a multiple
// of 2 (throws std::invalid_argument otherwise); the radial axis is untouched.
PolarImage roll_rotate(const PolarImage& img, int degrees);

}  // namespace tcprof
