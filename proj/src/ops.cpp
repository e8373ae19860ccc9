#include "tcprof/ops.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#ifdef _OPENMP
#include <omp.h>
#endif

#ifdef TCPROF_USE_CBLAS
#include <cblas.h>
#endif

#include "tcprof/errors.hpp"
#include "tcprof/wind_model.hpp"

#ifdef TCPROF_USE_CBLAS
extern "C" void openblas_set_num_threads(int);
#endif

namespace tcprof {

#ifdef TCPROF_USE_CBLAS
namespace {
// BLAS calls run inside the OpenMP batch loop; keep them single-threaded.
struct BlasThreadPin {
  BlasThreadPin() { openblas_set_num_threads(1); }
} blas_thread_pin;
}  // namespace
#endif

void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a,
          int lda, const double* b, int ldb, double beta, double* c, int ldc) {
#ifdef TCPROF_USE_CBLAS
  cblas_dgemm(CblasRowMajor, trans_a ? CblasTrans : CblasNoTrans,
              trans_b ? CblasTrans : CblasNoTrans, m, n, k, alpha, a, lda, b, ldb, beta, c, ldc);
#else
  for (int i = 0; i < m; ++i) {
    double* crow = c + static_cast<size_t>(i) * ldc;
    if (beta == 0.0) std::fill(crow, crow + n, 0.0);
    else if (beta != 1.0) {
      for (int j = 0; j < n; ++j) crow[j] *= beta;
    }
    for (int p = 0; p < k; ++p) {
      double av = trans_a ? a[static_cast<size_t>(p) * lda + i] : a[static_cast<size_t>(i) * lda + p];
      av *= alpha;
      const double* brow = trans_b ? nullptr : b + static_cast<size_t>(p) * ldb;
      if (trans_b) {
        for (int j = 0; j < n; ++j) crow[j] += av * b[static_cast<size_t>(j) * ldb + p];
      } else {
        for (int j = 0; j < n; ++j) crow[j] += av * brow[j];
      }
    }
  }
#endif
}

namespace {

int ceil_div(int a, int b) { return (a + b - 1) / b; }

struct ConvGeom {
  int n, cin, h, w;
  int cout, kh, kw;
  int sh, sw;
  int oh, ow;
  int pad_h_beg, pad_w_beg;
  Pad pad_h, pad_w;
  int q() const { return cin * kh * kw; }
  int p() const { return oh * ow; }
};

// col (Q, P) for one sample, row-major.
void im2col(const ConvGeom& g, const double* x, double* col) {
  for (int ci = 0; ci < g.cin; ++ci) {
    const double* plane = x + static_cast<size_t>(ci) * g.h * g.w;
    for (int kh = 0; kh < g.kh; ++kh) {
      for (int kw = 0; kw < g.kw; ++kw) {
        double* row = col + (static_cast<size_t>(ci) * g.kh * g.kw + kh * g.kw + kw) * g.p();
        for (int oh = 0; oh < g.oh; ++oh) {
          int ih = oh * g.sh - g.pad_h_beg + kh;
          bool h_in = ih >= 0 && ih < g.h;
          if (g.pad_h == Pad::circular) {
            ih = ((ih % g.h) + g.h) % g.h;
            h_in = true;
          }
          for (int ow = 0; ow < g.ow; ++ow) {
            int iw = ow * g.sw - g.pad_w_beg + kw;
            bool w_in = iw >= 0 && iw < g.w;
            if (g.pad_w == Pad::circular) {
              iw = ((iw % g.w) + g.w) % g.w;
              w_in = true;
            }
            row[oh * g.ow + ow] = (h_in && w_in) ? plane[ih * g.w + iw] : 0.0;
          }
        }
      }
    }
  }
}

// Scatter-add of a col-shaped gradient back onto the input plane.
void col2im_add(const ConvGeom& g, const double* col, double* dx) {
  for (int ci = 0; ci < g.cin; ++ci) {
    double* plane = dx + static_cast<size_t>(ci) * g.h * g.w;
    for (int kh = 0; kh < g.kh; ++kh) {
      for (int kw = 0; kw < g.kw; ++kw) {
        const double* row = col + (static_cast<size_t>(ci) * g.kh * g.kw + kh * g.kw + kw) * g.p();
        for (int oh = 0; oh < g.oh; ++oh) {
          int ih = oh * g.sh - g.pad_h_beg + kh;
          bool h_in = ih >= 0 && ih < g.h;
          if (g.pad_h == Pad::circular) {
            ih = ((ih % g.h) + g.h) % g.h;
            h_in = true;
          }
          if (!h_in) continue;
          for (int ow = 0; ow < g.ow; ++ow) {
            int iw = ow * g.sw - g.pad_w_beg + kw;
            bool w_in = iw >= 0 && iw < g.w;
            if (g.pad_w == Pad::circular) {
              iw = ((iw % g.w) + g.w) % g.w;
              w_in = true;
            }
            if (w_in) plane[ih * g.w + iw] += row[oh * g.ow + ow];
          }
        }
      }
    }
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride_h, int stride_w,
              Pad pad_h, Pad pad_w) {
  if (x.ndim() != 4 || w.ndim() != 4 || b.ndim() != 1) {
    throw std::invalid_argument("conv2d: expected x(4-D), w(4-D), b(1-D)");
  }
  if (x.dim(1) != w.dim(1)) throw std::invalid_argument("conv2d: channel mismatch");
  if (w.dim(0) != b.dim(0)) throw std::invalid_argument("conv2d: bias size mismatch");
  if (stride_h < 1 || stride_w < 1) throw std::invalid_argument("conv2d: bad stride");

  ConvGeom g;
  g.n = x.dim(0);
  g.cin = x.dim(1);
  g.h = x.dim(2);
  g.w = x.dim(3);
  g.cout = w.dim(0);
  g.kh = w.dim(2);
  g.kw = w.dim(3);
  g.sh = stride_h;
  g.sw = stride_w;
  g.oh = ceil_div(g.h, g.sh);
  g.ow = ceil_div(g.w, g.sw);
  g.pad_h = pad_h;
  g.pad_w = pad_w;
  int pad_h_total = std::max((g.oh - 1) * g.sh + g.kh - g.h, 0);
  int pad_w_total = std::max((g.ow - 1) * g.sw + g.kw - g.w, 0);
  g.pad_h_beg = pad_h_total / 2;
  g.pad_w_beg = pad_w_total / 2;

  const int Q = g.q(), P = g.p();
  auto cols = std::make_shared<std::vector<double>>(static_cast<size_t>(g.n) * Q * P);
  std::vector<double> out(static_cast<size_t>(g.n) * g.cout * P);

  const double* xv = x.values().data();
  const double* wv = w.values().data();
  const double* bv = b.values().data();

#pragma omp parallel for schedule(static)
  for (int n = 0; n < g.n; ++n) {
    double* col = cols->data() + static_cast<size_t>(n) * Q * P;
    im2col(g, xv + static_cast<size_t>(n) * g.cin * g.h * g.w, col);
    double* y = out.data() + static_cast<size_t>(n) * g.cout * P;
    gemm(false, false, g.cout, P, Q, 1.0, wv, Q, col, P, 0.0, y, P);
    for (int co = 0; co < g.cout; ++co) {
      double* yrow = y + static_cast<size_t>(co) * P;
      for (int p = 0; p < P; ++p) yrow[p] += bv[co];
    }
  }

  return make_op({g.n, g.cout, g.oh, g.ow}, std::move(out), {x, w, b},
                 [g, cols, Q, P](TensorNode& node) {
    auto& px = *node.parents[0];
    auto& pw = *node.parents[1];
    auto& pb = *node.parents[2];
    px.ensure_grad();
    pw.ensure_grad();
    pb.ensure_grad();

    const double* dy = node.grad.data();
    const double* wv = pw.value.data();

    // Bias: plain reduction over batch and positions.
    for (int n = 0; n < g.n; ++n) {
      for (int co = 0; co < g.cout; ++co) {
        const double* row = dy + (static_cast<size_t>(n) * g.cout + co) * P;
        double s = 0.0;
        for (int p = 0; p < P; ++p) s += row[p];
        pb.grad[co] += s;
      }
    }

    int max_threads = 1;
#ifdef _OPENMP
    max_threads = omp_get_max_threads();
#endif
    std::vector<std::vector<double>> dw_partial(max_threads,
                                                std::vector<double>(pw.grad.size(), 0.0));

#pragma omp parallel for schedule(static)
    for (int n = 0; n < g.n; ++n) {
      int tid = 0;
#ifdef _OPENMP
      tid = omp_get_thread_num();
#endif
      const double* col = cols->data() + static_cast<size_t>(n) * Q * P;
      const double* dyn = dy + static_cast<size_t>(n) * g.cout * P;
      // dW += dY_n * col_n^T
      gemm(false, true, g.cout, Q, P, 1.0, dyn, P, col, P, 1.0, dw_partial[tid].data(), Q);
      // dcol = W^T * dY_n, scattered back through the padding map
      std::vector<double> dcol(static_cast<size_t>(Q) * P);
      gemm(true, false, Q, P, g.cout, 1.0, wv, Q, dyn, P, 0.0, dcol.data(), P);
      col2im_add(g, dcol.data(), px.grad.data() + static_cast<size_t>(n) * g.cin * g.h * g.w);
    }
    for (const auto& part : dw_partial) {
      for (size_t i = 0; i < pw.grad.size(); ++i) pw.grad[i] += part[i];
    }
  });
}

namespace {

struct BnGeom {
  int n, c, s;  // batch, channels, spatial-per-channel
};

BnGeom bn_geom(const Tensor& x) {
  if (x.ndim() == 4) return {x.dim(0), x.dim(1), x.dim(2) * x.dim(3)};
  if (x.ndim() == 2) return {x.dim(0), x.dim(1), 1};
  throw std::invalid_argument("batchnorm: expected rank-2 or rank-4 input");
}

}  // namespace

Tensor batchnorm_train(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       std::vector<double>& running_mean, std::vector<double>& running_var,
                       double momentum, double eps) {
  BnGeom g = bn_geom(x);
  if (g.n < 2) {
    throw std::invalid_argument("batchnorm: training-mode batch of size 1 has undefined variance");
  }
  if (gamma.numel() != static_cast<size_t>(g.c) || beta.numel() != static_cast<size_t>(g.c) ||
      running_mean.size() != static_cast<size_t>(g.c) ||
      running_var.size() != static_cast<size_t>(g.c)) {
    throw std::invalid_argument("batchnorm: parameter size mismatch");
  }

  const size_t m = static_cast<size_t>(g.n) * g.s;  // samples per channel
  auto mu = std::make_shared<std::vector<double>>(g.c, 0.0);
  auto inv_sigma = std::make_shared<std::vector<double>>(g.c, 0.0);

  const double* xv = x.values().data();
  auto idx = [&](int n, int c, int s) {
    return (static_cast<size_t>(n) * g.c + c) * g.s + s;
  };

  for (int c = 0; c < g.c; ++c) {
    double sum = 0.0;
    for (int n = 0; n < g.n; ++n) {
      for (int s = 0; s < g.s; ++s) sum += xv[idx(n, c, s)];
    }
    double mean_c = sum / m;
    double var = 0.0;
    for (int n = 0; n < g.n; ++n) {
      for (int s = 0; s < g.s; ++s) {
        double d = xv[idx(n, c, s)] - mean_c;
        var += d * d;
      }
    }
    var /= m;
    (*mu)[c] = mean_c;
    (*inv_sigma)[c] = 1.0 / std::sqrt(var + eps);
    running_mean[c] = (1.0 - momentum) * running_mean[c] + momentum * mean_c;
    running_var[c] = (1.0 - momentum) * running_var[c] + momentum * var;
  }

  std::vector<double> out(x.numel());
  const double* gv = gamma.values().data();
  const double* bv = beta.values().data();
  for (int n = 0; n < g.n; ++n) {
    for (int c = 0; c < g.c; ++c) {
      for (int s = 0; s < g.s; ++s) {
        size_t i = idx(n, c, s);
        out[i] = gv[c] * (xv[i] - (*mu)[c]) * (*inv_sigma)[c] + bv[c];
      }
    }
  }

  return make_op(x.shape(), std::move(out), {x, gamma, beta},
                 [g, mu, inv_sigma, m](TensorNode& node) {
    auto& px = *node.parents[0];
    auto& pg = *node.parents[1];
    auto& pb = *node.parents[2];
    px.ensure_grad();
    pg.ensure_grad();
    pb.ensure_grad();

    auto idx = [&](int n, int c, int s) {
      return (static_cast<size_t>(n) * g.c + c) * g.s + s;
    };
    const double* xv = px.value.data();
    const double* gv = pg.value.data();
    const double* dy = node.grad.data();

    for (int c = 0; c < g.c; ++c) {
      const double mu_c = (*mu)[c], is_c = (*inv_sigma)[c];
      double sum_dy = 0.0, sum_dy_xhat = 0.0;
      for (int n = 0; n < g.n; ++n) {
        for (int s = 0; s < g.s; ++s) {
          size_t i = idx(n, c, s);
          double xhat = (xv[i] - mu_c) * is_c;
          sum_dy += dy[i];
          sum_dy_xhat += dy[i] * xhat;
        }
      }
      pg.grad[c] += sum_dy_xhat;
      pb.grad[c] += sum_dy;
      const double inv_m = 1.0 / static_cast<double>(m);
      for (int n = 0; n < g.n; ++n) {
        for (int s = 0; s < g.s; ++s) {
          size_t i = idx(n, c, s);
          double xhat = (xv[i] - mu_c) * is_c;
          px.grad[i] += gv[c] * is_c * (dy[i] - inv_m * sum_dy - xhat * inv_m * sum_dy_xhat);
        }
      }
    }
  });
}

Tensor batchnorm_eval(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                      const std::vector<double>& running_mean,
                      const std::vector<double>& running_var, double eps) {
  BnGeom g = bn_geom(x);
  if (gamma.numel() != static_cast<size_t>(g.c) || running_mean.size() != static_cast<size_t>(g.c)) {
    throw std::invalid_argument("batchnorm: parameter size mismatch");
  }

  auto scale_c = std::make_shared<std::vector<double>>(g.c);
  for (int c = 0; c < g.c; ++c) {
    (*scale_c)[c] = 1.0 / std::sqrt(running_var[c] + eps);
  }

  std::vector<double> out(x.numel());
  const double* xv = x.values().data();
  const double* gv = gamma.values().data();
  const double* bv = beta.values().data();
  auto mu = std::make_shared<std::vector<double>>(running_mean);
  for (int n = 0; n < g.n; ++n) {
    for (int c = 0; c < g.c; ++c) {
      for (int s = 0; s < g.s; ++s) {
        size_t i = (static_cast<size_t>(n) * g.c + c) * g.s + s;
        out[i] = gv[c] * (xv[i] - (*mu)[c]) * (*scale_c)[c] + bv[c];
      }
    }
  }

  return make_op(x.shape(), std::move(out), {x, gamma, beta},
                 [g, mu, scale_c](TensorNode& node) {
    auto& px = *node.parents[0];
    auto& pg = *node.parents[1];
    auto& pb = *node.parents[2];
    px.ensure_grad();
    pg.ensure_grad();
    pb.ensure_grad();
    const double* xv = px.value.data();
    const double* gv = pg.value.data();
    const double* dy = node.grad.data();
    for (int n = 0; n < g.n; ++n) {
      for (int c = 0; c < g.c; ++c) {
        for (int s = 0; s < g.s; ++s) {
          size_t i = (static_cast<size_t>(n) * g.c + c) * g.s + s;
          double xhat = (xv[i] - (*mu)[c]) * (*scale_c)[c];
          px.grad[i] += dy[i] * gv[c] * (*scale_c)[c];
          pg.grad[c] += dy[i] * xhat;
          pb.grad[c] += dy[i];
        }
      }
    }
  });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (x.ndim() != 2 || w.ndim() != 2 || b.ndim() != 1) {
    throw std::invalid_argument("linear: expected x(2-D), w(2-D), b(1-D)");
  }
  const int n = x.dim(0), fin = x.dim(1), fout = w.dim(0);
  if (w.dim(1) != fin || b.dim(0) != fout) throw std::invalid_argument("linear: size mismatch");

  std::vector<double> out(static_cast<size_t>(n) * fout);
  gemm(false, true, n, fout, fin, 1.0, x.values().data(), fin, w.values().data(), fin, 0.0,
       out.data(), fout);
  const double* bv = b.values().data();
  for (int i = 0; i < n; ++i) {
    double* row = out.data() + static_cast<size_t>(i) * fout;
    for (int j = 0; j < fout; ++j) row[j] += bv[j];
  }

  return make_op({n, fout}, std::move(out), {x, w, b}, [n, fin, fout](TensorNode& node) {
    auto& px = *node.parents[0];
    auto& pw = *node.parents[1];
    auto& pb = *node.parents[2];
    px.ensure_grad();
    pw.ensure_grad();
    pb.ensure_grad();
    const double* dy = node.grad.data();
    // dX += dY * W ; dW += dY^T * X ; db += column sums of dY
    gemm(false, false, n, fin, fout, 1.0, dy, fout, pw.value.data(), fin, 1.0, px.grad.data(),
         fin);
    gemm(true, false, fout, fin, n, 1.0, dy, fout, px.value.data(), fin, 1.0, pw.grad.data(),
         fin);
    for (int i = 0; i < n; ++i) {
      const double* row = dy + static_cast<size_t>(i) * fout;
      for (int j = 0; j < fout; ++j) pb.grad[j] += row[j];
    }
  });
}

Tensor flatten(const Tensor& x) {
  if (x.ndim() < 2) throw std::invalid_argument("flatten: expected rank >= 2");
  int n = x.dim(0);
  int f = static_cast<int>(x.numel() / n);
  std::vector<double> v = x.values();
  return make_op({n, f}, std::move(v), {x}, [](TensorNode& node) {
    auto& px = *node.parents[0];
    px.ensure_grad();
    for (size_t i = 0; i < node.grad.size(); ++i) px.grad[i] += node.grad[i];
  });
}

Tensor concat(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(0) != b.dim(0)) {
    throw std::invalid_argument("concat: expected 2-D tensors with matching batch");
  }
  const int n = a.dim(0), fa = a.dim(1), fb = b.dim(1);
  std::vector<double> v(static_cast<size_t>(n) * (fa + fb));
  for (int i = 0; i < n; ++i) {
    std::copy_n(a.values().begin() + static_cast<size_t>(i) * fa, fa,
                v.begin() + static_cast<size_t>(i) * (fa + fb));
    std::copy_n(b.values().begin() + static_cast<size_t>(i) * fb, fb,
                v.begin() + static_cast<size_t>(i) * (fa + fb) + fa);
  }
  return make_op({n, fa + fb}, std::move(v), {a, b}, [n, fa, fb](TensorNode& node) {
    auto& pa = *node.parents[0];
    auto& pb = *node.parents[1];
    pa.ensure_grad();
    pb.ensure_grad();
    for (int i = 0; i < n; ++i) {
      const double* row = node.grad.data() + static_cast<size_t>(i) * (fa + fb);
      for (int j = 0; j < fa; ++j) pa.grad[static_cast<size_t>(i) * fa + j] += row[j];
      for (int j = 0; j < fb; ++j) pb.grad[static_cast<size_t>(i) * fb + j] += row[fa + j];
    }
  });
}

Tensor infer_vmax(const Tensor& profiles) { return row_max(profiles); }

Tensor soft_r34(const Tensor& profiles, double tau) {
  if (profiles.ndim() != 2) throw std::invalid_argument("soft_r34: expected 2-D input");
  if (!(tau > 0.0)) throw std::invalid_argument("soft_r34: tau must be positive");
  const int n = profiles.dim(0), f = profiles.dim(1);

  std::vector<double> v(n, 0.0);
  const double* pv = profiles.values().data();
  for (int i = 0; i < n; ++i) {
    double s = 0.0;
    for (int j = 0; j < f; ++j) {
      s += 1.0 / (1.0 + std::exp(-(pv[static_cast<size_t>(i) * f + j] - kGaleKt) / tau));
    }
    v[i] = kProfileStepKm * s;
  }
  return make_op({n}, std::move(v), {profiles}, [n, f, tau](TensorNode& node) {
    auto& pp = *node.parents[0];
    pp.ensure_grad();
    const double* pv = pp.value.data();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < f; ++j) {
        size_t k = static_cast<size_t>(i) * f + j;
        double s = 1.0 / (1.0 + std::exp(-(pv[k] - kGaleKt) / tau));
        pp.grad[k] += node.grad[i] * kProfileStepKm * s * (1.0 - s) / tau;
      }
    }
  });
}

double infer_vmax(std::span<const double> profile) {
  if (profile.empty()) throw std::invalid_argument("infer_vmax: empty profile");
  double best = profile[0];
  for (double v : profile) {
    if (v > best) best = v;
  }
  return best;
}

double infer_r34(std::span<const double> profile) {
  int best = 0;
  for (size_t i = 0; i < profile.size(); ++i) {
    if (profile[i] >= kGaleKt) best = static_cast<int>(i);
  }
  return best * kProfileStepKm;
}

double soft_r34_value(std::span<const double> profile, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("soft_r34: tau must be positive");
  double s = 0.0;
  for (double v : profile) s += 1.0 / (1.0 + std::exp(-(v - kGaleKt) / tau));
  return kProfileStepKm * s;
}

Tensor composite_loss(const Tensor& pred, const Tensor& profile_labels,
                      const Tensor& vmax_labels, const Tensor& r34_labels,
                      const std::vector<int>& valid_rows, const std::vector<int>& r34_rows,
                      const LossWeights& w, double soft_tau) {
  if (pred.ndim() != 2 || pred.shape() != profile_labels.shape()) {
    throw std::invalid_argument("composite_loss: prediction/label shape mismatch");
  }
  const int n = pred.dim(0);
  if (vmax_labels.ndim() != 1 || vmax_labels.dim(0) != n) {
    throw std::invalid_argument("composite_loss: vmax label shape mismatch");
  }

  bool has_profile = !valid_rows.empty();
  bool has_vmax = w.alpha > 0.0;
  bool has_r34 = w.beta > 0.0 && !r34_rows.empty();
  if (!has_profile && !has_vmax && !has_r34) {
    throw DegenerateLossError(
        "composite_loss: no valid profiles in batch and alpha = beta = 0 leaves nothing to optimize");
  }

  Tensor total;
  if (has_profile) {
    Tensor diff = sub(select_rows(pred, valid_rows), select_rows(profile_labels, valid_rows));
    total = mean(square(diff));
  }
  if (has_vmax) {
    Tensor lv = mean(square(sub(infer_vmax(pred), vmax_labels)));
    Tensor term = scale(lv, w.alpha);
    total = total.defined() ? add(total, term) : term;
  }
  if (has_r34) {
    Tensor diff = sub(select_rows(soft_r34(pred, soft_tau), r34_rows),
                      select_rows(r34_labels, r34_rows));
    Tensor term = scale(mean(square(diff)), w.beta);
    total = total.defined() ? add(total, term) : term;
  }
  return total;
}

}  // namespace tcprof
