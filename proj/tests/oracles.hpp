#pragma once

// Independent reference implementations the test suites check against. These
// deliberately use naive direct formulas and stay clear of the library's
// computation paths.

#include <cmath>
#include <functional>
#include <vector>

#include "tcprof/geometry.hpp"
#include "tcprof/tensor.hpp"

namespace oracles {

// Plain four-corner weighted sum, no zero-weight skipping.
inline double bilinear(const tcprof::CartesianImage& img, double x, double y, int c) {
  int x0 = static_cast<int>(std::floor(x));
  int y0 = static_cast<int>(std::floor(y));
  if (x0 >= img.width - 1) x0 = img.width - 2;
  if (y0 >= img.height - 1) y0 = img.height - 2;
  if (x0 < 0) x0 = 0;
  if (y0 < 0) y0 = 0;
  double fx = x - x0, fy = y - y0;
  return img.at(c, y0, x0) * (1 - fx) * (1 - fy) + img.at(c, y0, x0 + 1) * fx * (1 - fy) +
         img.at(c, y0 + 1, x0) * (1 - fx) * fy + img.at(c, y0 + 1, x0 + 1) * fx * fy;
}

// Recomputes one polar cell directly from the projection formula.
inline double polar_cell(const tcprof::CartesianImage& img, int c, int i, int j,
                         double fill_value) {
  double theta = i * 2.0 * M_PI / 180.0;
  double r_px = j * 5.0 / img.pixel_spacing_km;
  double x = (img.width - 1) / 2.0 + r_px * std::cos(theta);
  double y = (img.height - 1) / 2.0 + r_px * std::sin(theta);
  if (x < 0 || x > img.width - 1 || y < 0 || y > img.height - 1) return fill_value;
  return bilinear(img, x, y, c);
}

// Direct nested-loop convolution: same-style padding, ceil(in/stride) output,
// circular or zero handling chosen per axis.
inline std::vector<double> conv2d_naive(const std::vector<double>& x, int n, int cin, int h,
                                        int w, const std::vector<double>& weight,
                                        const std::vector<double>& bias, int cout, int kh,
                                        int kw, int sh, int sw, bool circ_h, bool circ_w) {
  int oh = (h + sh - 1) / sh;
  int ow = (w + sw - 1) / sw;
  int pad_h = std::max((oh - 1) * sh + kh - h, 0) / 2;
  int pad_w = std::max((ow - 1) * sw + kw - w, 0) / 2;

  std::vector<double> out(static_cast<size_t>(n) * cout * oh * ow, 0.0);
  for (int b = 0; b < n; ++b) {
    for (int co = 0; co < cout; ++co) {
      for (int i = 0; i < oh; ++i) {
        for (int j = 0; j < ow; ++j) {
          double acc = bias[co];
          for (int ci = 0; ci < cin; ++ci) {
            for (int u = 0; u < kh; ++u) {
              for (int v = 0; v < kw; ++v) {
                int ih = i * sh - pad_h + u;
                int iw = j * sw - pad_w + v;
                double xv = 0.0;
                bool ok_h = ih >= 0 && ih < h;
                bool ok_w = iw >= 0 && iw < w;
                if (circ_h) {
                  ih = ((ih % h) + h) % h;
                  ok_h = true;
                }
                if (circ_w) {
                  iw = ((iw % w) + w) % w;
                  ok_w = true;
                }
                if (ok_h && ok_w) {
                  xv = x[((static_cast<size_t>(b) * cin + ci) * h + ih) * w + iw];
                }
                acc += xv * weight[((static_cast<size_t>(co) * cin + ci) * kh + u) * kw + v];
              }
            }
          }
          out[((static_cast<size_t>(b) * cout + co) * oh + i) * ow + j] = acc;
        }
      }
    }
  }
  return out;
}

// Central finite differences against backprop. Builds the graph through
// `forward` twice per probe; returns the worst relative error seen.
struct GradCheckResult {
  double max_rel_err = 0.0;
  int probes = 0;
};

inline GradCheckResult grad_check(
    const std::function<tcprof::Tensor()>& forward, std::vector<tcprof::Tensor> inputs,
    tcprof::Rng& rng, int probes_per_input, double h = 1e-5) {
  GradCheckResult res;

  tcprof::Tensor loss = forward();
  loss.backward();
  std::vector<std::vector<double>> grads;
  for (auto& t : inputs) grads.push_back(t.grad());

  for (size_t ti = 0; ti < inputs.size(); ++ti) {
    auto& vals = inputs[ti].values();
    for (int p = 0; p < probes_per_input; ++p) {
      size_t i = static_cast<size_t>(rng.uniform() * vals.size());
      if (i >= vals.size()) i = vals.size() - 1;
      double keep = vals[i];
      double step = h * std::max(1.0, std::abs(keep));
      vals[i] = keep + step;
      double up = forward().item();
      vals[i] = keep - step;
      double down = forward().item();
      vals[i] = keep;
      double fd = (up - down) / (2.0 * step);
      double bp = grads[ti][i];
      double rel = std::abs(fd - bp) / std::max({std::abs(fd), std::abs(bp), 1e-6});
      if (rel > res.max_rel_err) res.max_rel_err = rel;
      ++res.probes;
    }
  }
  return res;
}

}  // namespace oracles
