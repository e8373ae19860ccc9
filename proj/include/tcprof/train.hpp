#pragma once

#include <array>
#include <string>
#include <vector>

#include "tcprof/dataset.hpp"
#include "tcprof/nn.hpp"

namespace tcprof {

struct TrainConfig {
  int kernel_angle = 4;
  int kernel_radius = 3;
  double alpha = 0.3;
  double beta = 0.0;
  int epochs = 20;
  int batch_size = 32;
  uint64_t seed = 0;
  double lr = 1e-3;
  int blend_count = 10;  // must divide 180 so blend rolls are exact
  bool blend_median = false;
  bool cartesian = false;  // train on the raw grid; rolls do not apply there
  double soft_tau = 1.0;
};

struct EvalReport {
  double profile_rmse_kt = 0.0;
  double vmax_rmse_kt = 0.0;
  double r34_rmse_km = 0.0;
  int selected_epoch = 0;               // 1-based; argmin of val_curve, ties earliest
  std::vector<double> val_curve;        // per-epoch validation profile RMSE
};

struct TrainResult {
  ProfilerNet net;
  EvalReport report;
};

using Profile = std::array<double, kProfilePoints>;

// Predicts on blend_count rolls (even steps over 360 degrees) and averages
// pointwise; per-point contributions are sorted before reduction so the blend
// is independent of roll order. Cartesian-mode nets predict single-pass.
Profile blend_predict(ProfilerNet& net, const SampleRecord& rec, int blend_count,
                      bool median = false);

struct Metrics {
  double profile_rmse_kt = 0.0;  // valid-profile samples only
  double vmax_rmse_kt = 0.0;     // all samples
  double r34_rmse_km = 0.0;      // r34-labeled samples only
};

Metrics metrics_from_predictions(const std::vector<Profile>& preds,
                                 const std::vector<SampleRecord>& records,
                                 const std::vector<size_t>& indices);

EvalReport evaluate(ProfilerNet& net, const std::vector<SampleRecord>& records,
                    const std::vector<size_t>& indices, int blend_count,
                    bool blend_median = false);

// Rotation-augmented training with per-epoch validation; returns the network
// restored to the best epoch. Throws TrainDivergedError on non-finite loss.
TrainResult train(const TrainConfig& cfg, const std::vector<SampleRecord>& records,
                  const std::vector<size_t>& train_idx, const std::vector<size_t>& val_idx);

// Constant mean-profile predictor over the valid training profiles, the
// baseline the learned model has to beat.
Profile mean_profile(const std::vector<SampleRecord>& records,
                     const std::vector<size_t>& indices);
double profile_rmse_of_constant(const Profile& constant,
                                const std::vector<SampleRecord>& records,
                                const std::vector<size_t>& indices);

struct SweepItem {
  std::string coordinate = "Polar";  // or "Cartesian"
  int kernel_angle = 4;
  int kernel_radius = 3;
  double alpha = 0.3;
  double beta = 0.0;
};

struct SweepRow {
  SweepItem item;
  EvalReport report;
};

// One independent run per item, seeds derived from cfg.seed by item index.
std::vector<SweepRow> run_sweep(const std::vector<SweepItem>& items, const TrainConfig& base,
                                const std::vector<SampleRecord>& records,
                                const std::vector<size_t>& train_idx,
                                const std::vector<size_t>& val_idx);

// CSV renderings with the kernel-table / loss-table column names.
std::string kernel_sweep_csv(const std::vector<SweepRow>& rows);
std::string loss_sweep_csv(const std::vector<SweepRow>& rows);
std::vector<SweepRow> parse_sweep_csv(const std::string& csv_text);

}  // namespace tcprof
