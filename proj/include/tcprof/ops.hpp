#pragma once

#include <span>
#include <vector>

#include "tcprof/tensor.hpp"

namespace tcprof {

enum class Pad { zero, circular };

// Dense row-major matmul: C = alpha * op(A)[M,K] * op(B)[K,N] + beta * C.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, double alpha, const double* a,
          int lda, const double* b, int ldb, double beta, double* c, int ldc);

// Strided 2-D convolution with "same"-style padding: output spatial dims are
// ceil(in/stride). The pad mode is chosen per axis: circular wraps (used for
// the periodic angular axis), zero fills (radial and plain-grid axes).
// x (N,Cin,H,W), w (Cout,Cin,KH,KW), b (Cout) -> (N,Cout,ceil(H/sh),ceil(W/sw)).
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride_h, int stride_w,
              Pad pad_h, Pad pad_w);

// Batch normalization over rank-4 (per channel, stats across N*H*W) or rank-2
// (per feature, stats across N) inputs. Training mode uses batch statistics
// (population variance) and updates the running buffers in place; a training
// batch of size 1 throws. Eval mode normalizes with the running buffers.
Tensor batchnorm_train(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                       std::vector<double>& running_mean, std::vector<double>& running_var,
                       double momentum, double eps);
Tensor batchnorm_eval(const Tensor& x, const Tensor& gamma, const Tensor& beta,
                      const std::vector<double>& running_mean,
                      const std::vector<double>& running_var, double eps);

// y = x * w^T + b for x (N,Fin), w (Fout,Fin), b (Fout).
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

Tensor flatten(const Tensor& x);  // (N, ...) -> (N, prod)
Tensor concat(const Tensor& a, const Tensor& b);  // along dim 1

// Differentiable profile transforms. infer_vmax routes its gradient to the
// argmax point (Eq.-style max over the profile); soft_r34 is the smooth size
// surrogate 5 * sum_i sigmoid((p_i - 34)/tau) used when the size loss is on.
Tensor infer_vmax(const Tensor& profiles);            // (N,151) -> (N)
Tensor soft_r34(const Tensor& profiles, double tau);  // (N,151) -> (N)

// Scalar counterparts for metrics and label handling. infer_r34 is the exact
// transform: largest index with wind >= 34 kt, times 5 km; 0 when no point
// reaches 34 kt.
double infer_vmax(std::span<const double> profile);
double infer_r34(std::span<const double> profile);
double soft_r34_value(std::span<const double> profile, double tau);

struct LossWeights {
  double alpha = 0.3;  // intensity-loss factor
  double beta = 0.0;   // size-loss factor
};

// L = l_profile (valid-profile rows) + alpha * l_vmax (all rows)
//   + beta * l_r34 (r34-labeled rows, via soft_r34). Each term is a mean over
// its own denominator; absent terms drop out. Throws DegenerateLossError when
// nothing contributes.
Tensor composite_loss(const Tensor& pred, const Tensor& profile_labels,
                      const Tensor& vmax_labels, const Tensor& r34_labels,
                      const std::vector<int>& valid_rows, const std::vector<int>& r34_rows,
                      const LossWeights& w, double soft_tau = 1.0);

}  // namespace tcprof
