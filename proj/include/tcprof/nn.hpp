#pragma once

#include <string>
#include <vector>

#include "tcprof/ops.hpp"
#include "tcprof/tensor.hpp"
#include "tcprof/util.hpp"

namespace tcprof {

struct Conv2dLayer {
  Tensor w, b;
  int stride_h = 2, stride_w = 2;
  Pad pad_h = Pad::circular, pad_w = Pad::zero;

  static Conv2dLayer make(int cin, int cout, int kh, int kw, int sh, int sw, Pad ph, Pad pw,
                          Rng& rng);
  Tensor forward(const Tensor& x) const {
    return conv2d(x, w, b, stride_h, stride_w, pad_h, pad_w);
  }
};

struct BatchNormLayer {
  Tensor gamma, beta;
  std::vector<double> running_mean, running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  static BatchNormLayer make(int channels);
  Tensor forward(const Tensor& x, bool training) {
    if (training) return batchnorm_train(x, gamma, beta, running_mean, running_var, momentum, eps);
    return batchnorm_eval(x, gamma, beta, running_mean, running_var, eps);
  }
};

struct LinearLayer {
  Tensor w, b;
  static LinearLayer make(int fin, int fout, Rng& rng);
  Tensor forward(const Tensor& x) const { return linear(x, w, b); }
};

struct NetConfig {
  int kernel_angle = 4;
  int kernel_radius = 3;
  bool cartesian = false;  // raw 128x128 grid, zero padding on both axes
  int in_channels = 2;
  int in_h = 180;  // angular axis (or rows when cartesian)
  int in_w = 103;  // radial axis (or columns when cartesian)
  std::vector<int> conv_dims{16, 32, 64, 128, 256, 512};
  int aux_dim = 10;
  int fc1 = 256, fc2 = 64, out = 151;

  static NetConfig polar(int kernel_angle = 4, int kernel_radius = 3);
  static NetConfig cartesian_grid(int kernel_h = 4, int kernel_w = 3, int size = 128);
};

// The profiler network: input batch norm (z-score), six strided sector-kernel
// convolutions (each BN + relu), flatten, concat of 10 auxiliary features,
// then 256/64 linear layers (BN + relu) into a raw 151-point profile head.
class ProfilerNet {
 public:
  ProfilerNet(const NetConfig& cfg, uint64_t init_seed);

  ProfilerNet(const ProfilerNet&) = delete;
  ProfilerNet& operator=(const ProfilerNet&) = delete;
  ProfilerNet(ProfilerNet&&) = default;
  ProfilerNet& operator=(ProfilerNet&&) = default;

  // images (N, in_channels, in_h, in_w), aux (N, aux_dim) -> (N, 151)
  Tensor forward(const Tensor& images, const Tensor& aux);

  void set_training(bool training) { training_ = training; }
  bool training() const { return training_; }
  const NetConfig& config() const { return cfg_; }

  std::vector<std::pair<std::string, Tensor>> named_parameters();
  std::vector<Tensor> parameters();
  std::vector<std::pair<std::string, std::vector<double>*>> named_buffers();
  size_t param_count() const;

  // Deep copy of all parameters and running statistics, for best-epoch
  // snapshots; restore expects a state from an identically configured net.
  std::vector<std::vector<double>> state() const;
  void set_state(const std::vector<std::vector<double>>& state);

 private:
  NetConfig cfg_;
  bool training_ = true;
  BatchNormLayer input_bn_;
  std::vector<Conv2dLayer> convs_;
  std::vector<BatchNormLayer> conv_bns_;
  LinearLayer fc1_, fc2_, fc3_;
  BatchNormLayer fc1_bn_, fc2_bn_;
  int flat_dim_ = 0;
};

// Spatial size chain under ceil(in/stride) with stride 2.
std::vector<std::pair<int, int>> conv_output_chain(int h, int w, int layers);

class Adam {
 public:
  explicit Adam(std::vector<Tensor> params, double lr = 1e-3, double beta1 = 0.9,
                double beta2 = 0.999, double eps = 1e-8);
  void step();
  void zero_grad();

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> m_, v_;
  double lr_, beta1_, beta2_, eps_;
  long t_ = 0;
};

// Checkpoints use the archive container conventions: manifest.json plus one
// little-endian float64 blob; round-trips are bit-exact.
void save_checkpoint(ProfilerNet& net, const std::string& dir);
ProfilerNet load_checkpoint(const std::string& dir);

}  // namespace tcprof
