#include "tcprof/geometry.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace tcprof {

CartesianImage CartesianImage::zeros(int channels, int height, int width,
                                     double pixel_spacing_km) {
  CartesianImage img;
  img.channels = channels;
  img.height = height;
  img.width = width;
  img.pixel_spacing_km = pixel_spacing_km;
  img.data.assign(static_cast<size_t>(channels) * height * width, 0.0);
  return img;
}

PolarImage PolarImage::zeros(int channels, int n_angles, int n_radii) {
  PolarImage img;
  img.channels = channels;
  img.n_angles = n_angles;
  img.n_radii = n_radii;
  img.data.assign(static_cast<size_t>(channels) * n_angles * n_radii, 0.0);
  return img;
}

double sample_bilinear(const CartesianImage& img, double x, double y, int channel) {
  if (!(x >= 0.0 && x <= img.width - 1.0 && y >= 0.0 && y <= img.height - 1.0)) {
    throw std::out_of_range("sample_bilinear: (" + std::to_string(x) + ", " +
                            std::to_string(y) + ") outside image");
  }
  int x0 = static_cast<int>(std::floor(x));
  int y0 = static_cast<int>(std::floor(y));
  if (x0 == img.width - 1) --x0;   // x == w-1 lands on the last cell edge
  if (y0 == img.height - 1) --y0;
  if (img.width == 1) x0 = 0;
  if (img.height == 1) y0 = 0;
  double fx = x - x0;
  double fy = y - y0;

  int x1 = img.width == 1 ? x0 : x0 + 1;
  int y1 = img.height == 1 ? y0 : y0 + 1;
  const double w00 = (1.0 - fx) * (1.0 - fy);
  const double w10 = fx * (1.0 - fy);
  const double w01 = (1.0 - fx) * fy;
  const double w11 = fx * fy;

  double v = 0.0;
  if (w00 != 0.0) v += w00 * img.at(channel, y0, x0);
  if (w10 != 0.0) v += w10 * img.at(channel, y0, x1);
  if (w01 != 0.0) v += w01 * img.at(channel, y1, x0);
  if (w11 != 0.0) v += w11 * img.at(channel, y1, x1);
  return v;
}

namespace {
double finite_mean(const CartesianImage& img, int c) {
  double sum = 0.0;
  size_t n = 0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      double v = img.at(c, y, x);
      if (std::isfinite(v)) {
        sum += v;
        ++n;
      }
    }
  }
  return n ? sum / n : 0.0;
}
}  // namespace

PolarImage cart_to_polar(const CartesianImage& img) {
  if (img.height != img.width) throw std::invalid_argument("cart_to_polar: image must be square");
  if (!(img.pixel_spacing_km > 0)) throw std::invalid_argument("cart_to_polar: pixel_spacing_km must be > 0");

  PolarImage out = PolarImage::zeros(img.channels);
  const double cx = img.center_x();
  const double cy = img.center_y();
  const double deg2rad = M_PI / 180.0;

  std::vector<double> fill(img.channels);
  for (int c = 0; c < img.channels; ++c) fill[c] = finite_mean(img, c);

  for (int c = 0; c < img.channels; ++c) {
    for (int i = 0; i < out.n_angles; ++i) {
      const double theta = i * kDegPerAngleIndex * deg2rad;
      const double ct = std::cos(theta);
      const double st = std::sin(theta);
      for (int j = 0; j < out.n_radii; ++j) {
        const double r_px = j * kKmPerRadiusIndex / img.pixel_spacing_km;
        const double x = cx + r_px * ct;
        const double y = cy + r_px * st;
        if (x < 0.0 || x > img.width - 1.0 || y < 0.0 || y > img.height - 1.0) {
          out.at(c, i, j) = fill[c];
        } else {
          out.at(c, i, j) = sample_bilinear(img, x, y, c);
        }
      }
    }
  }
  return out;
}

PolarImage roll_rotate(const PolarImage& img, int degrees) {
  if (degrees % 2 != 0) {
    throw std::invalid_argument("roll_rotate: degrees must be a multiple of 2, got " +
                                std::to_string(degrees));
  }
  int shift = (degrees / 2) % img.n_angles;
  if (shift < 0) shift += img.n_angles;

  PolarImage out = PolarImage::zeros(img.channels, img.n_angles, img.n_radii);
  for (int c = 0; c < img.channels; ++c) {
    for (int a = 0; a < img.n_angles; ++a) {
      int src = a - shift;
      if (src < 0) src += img.n_angles;
      for (int r = 0; r < img.n_radii; ++r) out.at(c, a, r) = img.at(c, src, r);
    }
  }
  return out;
}

}  // namespace tcprof
