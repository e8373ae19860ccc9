#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "tcprof/geometry.hpp"
#include "tcprof/util.hpp"

using namespace tcprof;

namespace {
CartesianImage random_image(int channels, int size, uint64_t seed, double spacing = 8.05) {
  CartesianImage img = CartesianImage::zeros(channels, size, size, spacing);
  Rng rng(seed);
  for (double& v : img.data) v = rng.uniform(-50.0, 300.0);
  return img;
}
}  // namespace

TEST_CASE("bilinear is exact at integer coordinates") {
  CartesianImage img = random_image(1, 8, 1);
  CHECK(sample_bilinear(img, 3.0, 7.0) == img.at(0, 7, 3));
  CHECK(sample_bilinear(img, 0.0, 0.0) == img.at(0, 0, 0));
  CHECK(sample_bilinear(img, 7.0, 7.0) == img.at(0, 7, 7));
}

TEST_CASE("bilinear of a constant image is the constant") {
  CartesianImage img = CartesianImage::zeros(1, 8, 8);
  for (double& v : img.data) v = 7.0;
  Rng rng(2);
  for (int k = 0; k < 50; ++k) {
    double x = rng.uniform(0.0, 7.0);
    double y = rng.uniform(0.0, 7.0);
    CHECK(sample_bilinear(img, x, y) == doctest::Approx(7.0).epsilon(1e-12));
  }
}

TEST_CASE("bilinear matches the naive weighted-sum oracle") {
  CartesianImage img = random_image(1, 8, 3);
  Rng rng(4);
  for (int k = 0; k < 100; ++k) {
    double x = rng.uniform(0.0, 7.0);
    double y = rng.uniform(0.0, 7.0);
    CHECK(sample_bilinear(img, x, y) ==
          doctest::Approx(oracles::bilinear(img, x, y, 0)).epsilon(1e-6));
  }
}

TEST_CASE("bilinear rejects out-of-bounds coordinates") {
  CartesianImage img = random_image(1, 8, 5);
  CHECK_THROWS_AS(sample_bilinear(img, -0.1, 0.0), std::out_of_range);
  CHECK_THROWS_AS(sample_bilinear(img, 0.0, 7.1), std::out_of_range);
}

TEST_CASE("bilinear at integer coordinate is immune to a NaN neighbor") {
  CartesianImage img = random_image(1, 8, 6);
  img.at(0, 2, 4) = std::nan("");
  CHECK(sample_bilinear(img, 3.0, 2.0) == img.at(0, 2, 3));
  CHECK(std::isnan(sample_bilinear(img, 3.5, 2.0)));
}

TEST_CASE("cart_to_polar of a constant image is constant") {
  CartesianImage img = CartesianImage::zeros(2, 128, 128);
  for (double& v : img.data) v = 5.5;
  PolarImage p = cart_to_polar(img);
  for (double v : p.data) CHECK(v == doctest::Approx(5.5).epsilon(1e-12));
}

TEST_CASE("radially symmetric image gives identical angular rows") {
  // Wide Gaussian in squared distance: smooth enough that the bilinear
  // interpolation error sits far below the 1e-5 row-identity tolerance while
  // the field itself still varies by ~3e-2 across the image.
  CartesianImage img = CartesianImage::zeros(1, 128, 128);
  for (int y = 0; y < 128; ++y) {
    for (int x = 0; x < 128; ++x) {
      double d = std::hypot(x - img.center_x(), y - img.center_y()) * img.pixel_spacing_km;
      img.at(0, y, x) = std::exp(-d * d / 8.0e6);
    }
  }
  PolarImage p = cart_to_polar(img);
  for (int j = 0; j < p.n_radii; ++j) {
    double first = p.at(0, 0, j);
    for (int i = 1; i < p.n_angles; ++i) {
      CHECK(std::abs(p.at(0, i, j) - first) < 1e-5);
    }
  }
}

TEST_CASE("quarter-turn grid symmetry holds for any radial field") {
  // The Cartesian lattice maps onto itself under 90-degree rotation, so rows
  // 45 indices apart agree to rounding even for a sharp radial profile.
  CartesianImage img = CartesianImage::zeros(1, 128, 128);
  for (int y = 0; y < 128; ++y) {
    for (int x = 0; x < 128; ++x) {
      double d = std::hypot(x - img.center_x(), y - img.center_y()) * img.pixel_spacing_km;
      img.at(0, y, x) = 250.0 / (1.0 + d / 30.0) + std::sin(d / 11.0) * 20.0;
    }
  }
  PolarImage p = cart_to_polar(img);
  for (int i = 0; i < p.n_angles; ++i) {
    for (int j = 0; j < p.n_radii; ++j) {
      CHECK(p.at(0, i, j) == doctest::Approx(p.at(0, (i + 45) % 180, j)).epsilon(1e-9));
    }
  }
}

TEST_CASE("cart_to_polar matches the per-cell direct-formula oracle") {
  CartesianImage img = random_image(2, 128, 7);
  PolarImage p = cart_to_polar(img);
  for (int c = 0; c < 2; ++c) {
    double fill = 0.0;
    {
      double sum = 0.0;
      for (int y = 0; y < 128; ++y)
        for (int x = 0; x < 128; ++x) sum += img.at(c, y, x);
      fill = sum / (128.0 * 128.0);
    }
    for (int i = 0; i < p.n_angles; ++i) {
      for (int j = 0; j < p.n_radii; ++j) {
        double expect = oracles::polar_cell(img, c, i, j, fill);
        CHECK(std::abs(p.at(c, i, j) - expect) < 1e-6);
      }
    }
  }
}

TEST_CASE("radius zero samples the center for every angle") {
  CartesianImage img = random_image(1, 64, 8);
  PolarImage p = cart_to_polar(img);
  double center = img.at(0, 31, 31);  // integer center at (63/2) = 31.5 -> interpolated
  (void)center;
  double first = p.at(0, 0, 0);
  for (int i = 0; i < p.n_angles; ++i) CHECK(p.at(0, i, 0) == first);
}

TEST_CASE("out-of-bounds polar samples take the channel mean") {
  CartesianImage img = random_image(1, 32, 9, 1.0);  // 1 km/px: radii beyond ~15 km exit
  double mean = 0.0;
  for (double v : img.data) mean += v;
  mean /= img.data.size();
  PolarImage p = cart_to_polar(img);
  CHECK(p.at(0, 0, p.n_radii - 1) == doctest::Approx(mean).epsilon(1e-12));
}

TEST_CASE("NaN pixels propagate to polar cells") {
  CartesianImage img = CartesianImage::zeros(1, 128, 128);
  for (double& v : img.data) v = 1.0;
  img.at(0, 64, 64) = std::nan("");
  PolarImage p = cart_to_polar(img);
  bool any_nan = false;
  for (double v : p.data) any_nan |= std::isnan(v);
  CHECK(any_nan);
}

TEST_CASE("roll by 360 degrees is the identity") {
  CartesianImage img = random_image(2, 128, 10);
  PolarImage p = cart_to_polar(img);
  PolarImage r = roll_rotate(p, 360);
  CHECK(r.data == p.data);
}

TEST_CASE("roll by 2 degrees shifts the angular index by one") {
  CartesianImage img = random_image(1, 128, 11);
  PolarImage p = cart_to_polar(img);
  PolarImage r = roll_rotate(p, 2);
  for (int i = 0; i < p.n_angles; ++i) {
    for (int j = 0; j < p.n_radii; ++j) {
      CHECK(r.at(0, (i + 1) % p.n_angles, j) == p.at(0, i, j));
    }
  }
}

TEST_CASE("roll rejects odd degrees") {
  PolarImage p = PolarImage::zeros(1);
  CHECK_THROWS_AS(roll_rotate(p, 3), std::invalid_argument);
  CHECK_NOTHROW(roll_rotate(p, -4));
}

TEST_CASE("rolls compose modulo 360") {
  CartesianImage img = random_image(1, 128, 12);
  PolarImage p = cart_to_polar(img);
  Rng rng(13);
  for (int k = 0; k < 10; ++k) {
    int a = 2 * rng.uniform_int(0, 359);
    int b = 2 * rng.uniform_int(0, 359);
    PolarImage lhs = roll_rotate(roll_rotate(p, a), b);
    PolarImage rhs = roll_rotate(p, (a + b) % 720);
    CHECK(lhs.data == rhs.data);
  }
}

TEST_CASE("180 successive 2-degree rolls are the bit-exact identity") {
  CartesianImage img = random_image(2, 128, 14);
  PolarImage p = cart_to_polar(img);
  PolarImage r = p;
  for (int k = 0; k < 180; ++k) r = roll_rotate(r, 2);
  CHECK(r.data == p.data);
}
