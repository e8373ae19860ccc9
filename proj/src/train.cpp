#include "tcprof/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "tcprof/errors.hpp"
#include "tcprof/ops.hpp"
#include "tcprof/util.hpp"

namespace tcprof {

namespace {

struct Batch {
  Tensor images, aux, profiles, vmax, r34;
  std::vector<int> valid_rows, r34_rows;
};

// roll_shifts are angular-index shifts per sample; ignored in cartesian mode.
Batch make_batch(const std::vector<SampleRecord>& records, const std::vector<size_t>& indices,
                 const std::vector<int>* roll_shifts, bool cartesian) {
  const int n = static_cast<int>(indices.size());
  Batch batch;

  int c, h, w;
  if (cartesian) {
    if (!records[indices[0]].cartesian) {
      throw std::invalid_argument("cartesian training requires records with cartesian images");
    }
    const auto& img = *records[indices[0]].cartesian;
    c = img.channels;
    h = img.height;
    w = img.width;
  } else {
    const auto& img = records[indices[0]].polar;
    c = img.channels;
    h = img.n_angles;
    w = img.n_radii;
  }

  std::vector<double> images(static_cast<size_t>(n) * c * h * w);
  std::vector<double> aux(static_cast<size_t>(n) * kAuxDim);
  std::vector<double> profiles(static_cast<size_t>(n) * kProfilePoints, 0.0);
  std::vector<double> vmax(n, 0.0), r34(n, 0.0);

  for (int k = 0; k < n; ++k) {
    const SampleRecord& rec = records[indices[k]];
    double* dst = images.data() + static_cast<size_t>(k) * c * h * w;
    if (cartesian) {
      std::copy(rec.cartesian->data.begin(), rec.cartesian->data.end(), dst);
    } else {
      int shift = roll_shifts ? (*roll_shifts)[k] % h : 0;
      if (shift < 0) shift += h;
      for (int ci = 0; ci < c; ++ci) {
        for (int a = 0; a < h; ++a) {
          int src = a - shift;
          if (src < 0) src += h;
          std::copy_n(rec.polar.data.begin() + (static_cast<size_t>(ci) * h + src) * w, w,
                      dst + (static_cast<size_t>(ci) * h + a) * w);
        }
      }
    }
    std::copy(rec.aux.v.begin(), rec.aux.v.end(), aux.begin() + static_cast<size_t>(k) * kAuxDim);
    vmax[k] = rec.params.vmax_kt;
    if (rec.profile.valid) {
      batch.valid_rows.push_back(k);
      std::copy(rec.profile.speeds_kt.begin(), rec.profile.speeds_kt.end(),
                profiles.begin() + static_cast<size_t>(k) * kProfilePoints);
    }
    if (rec.params.r34_km) {
      batch.r34_rows.push_back(k);
      r34[k] = *rec.params.r34_km;
    }
  }

  batch.images = Tensor::from(std::move(images), {n, c, h, w});
  batch.aux = Tensor::from(std::move(aux), {n, kAuxDim});
  batch.profiles = Tensor::from(std::move(profiles), {n, kProfilePoints});
  batch.vmax = Tensor::from(std::move(vmax), {n});
  batch.r34 = Tensor::from(std::move(r34), {n});
  return batch;
}

}  // namespace

Profile blend_predict(ProfilerNet& net, const SampleRecord& rec, int blend_count, bool median) {
  bool was_training = net.training();
  net.set_training(false);

  Profile out{};
  if (net.config().cartesian) {
    Batch b = make_batch({rec}, {0}, nullptr, true);
    Tensor pred = net.forward(b.images, b.aux);
    std::copy_n(pred.values().begin(), kProfilePoints, out.begin());
    net.set_training(was_training);
    return out;
  }

  if (blend_count < 1 || 180 % blend_count != 0) {
    throw std::invalid_argument("blend_count must divide 180");
  }
  const int step = 180 / blend_count;  // angular indices per blend roll

  const PolarImage& img = rec.polar;
  const int c = img.channels, h = img.n_angles, w = img.n_radii;
  std::vector<double> images(static_cast<size_t>(blend_count) * c * h * w);
  std::vector<double> aux(static_cast<size_t>(blend_count) * kAuxDim);
  for (int k = 0; k < blend_count; ++k) {
    int shift = k * step;
    double* dst = images.data() + static_cast<size_t>(k) * c * h * w;
    for (int ci = 0; ci < c; ++ci) {
      for (int a = 0; a < h; ++a) {
        int src = a - shift;
        if (src < 0) src += h;
        std::copy_n(img.data.begin() + (static_cast<size_t>(ci) * h + src) * w, w,
                    dst + (static_cast<size_t>(ci) * h + a) * w);
      }
    }
    std::copy(rec.aux.v.begin(), rec.aux.v.end(), aux.begin() + static_cast<size_t>(k) * kAuxDim);
  }

  Tensor pred = net.forward(Tensor::from(std::move(images), {blend_count, c, h, w}),
                            Tensor::from(std::move(aux), {blend_count, kAuxDim}));

  // Sorting makes the reduction independent of the order the rolls were fed.
  std::vector<double> column(blend_count);
  for (int j = 0; j < kProfilePoints; ++j) {
    for (int k = 0; k < blend_count; ++k) column[k] = pred.values()[static_cast<size_t>(k) * kProfilePoints + j];
    std::sort(column.begin(), column.end());
    if (median) {
      out[j] = blend_count % 2 ? column[blend_count / 2]
                               : 0.5 * (column[blend_count / 2 - 1] + column[blend_count / 2]);
    } else {
      double s = 0.0;
      for (double v : column) s += v;
      out[j] = s / blend_count;
    }
  }
  net.set_training(was_training);
  return out;
}

Metrics metrics_from_predictions(const std::vector<Profile>& preds,
                                 const std::vector<SampleRecord>& records,
                                 const std::vector<size_t>& indices) {
  if (preds.size() != indices.size()) {
    throw std::invalid_argument("metrics_from_predictions: prediction count mismatch");
  }
  double prof_se = 0.0, vmax_se = 0.0, r34_se = 0.0;
  size_t prof_n = 0, vmax_n = 0, r34_n = 0;

  for (size_t k = 0; k < indices.size(); ++k) {
    const SampleRecord& rec = records[indices[k]];
    const Profile& p = preds[k];

    double pv = infer_vmax(std::span<const double>(p.data(), p.size()));
    vmax_se += (pv - rec.params.vmax_kt) * (pv - rec.params.vmax_kt);
    ++vmax_n;

    if (rec.profile.valid) {
      for (int j = 0; j < kProfilePoints; ++j) {
        double d = p[j] - rec.profile.speeds_kt[j];
        prof_se += d * d;
      }
      prof_n += kProfilePoints;
    }
    if (rec.params.r34_km) {
      double pr = infer_r34(std::span<const double>(p.data(), p.size()));
      r34_se += (pr - *rec.params.r34_km) * (pr - *rec.params.r34_km);
      ++r34_n;
    }
  }

  Metrics m;
  m.profile_rmse_kt = prof_n ? std::sqrt(prof_se / prof_n) : 0.0;
  m.vmax_rmse_kt = vmax_n ? std::sqrt(vmax_se / vmax_n) : 0.0;
  m.r34_rmse_km = r34_n ? std::sqrt(r34_se / r34_n) : 0.0;
  return m;
}

EvalReport evaluate(ProfilerNet& net, const std::vector<SampleRecord>& records,
                    const std::vector<size_t>& indices, int blend_count, bool blend_median) {
  std::vector<Profile> preds;
  preds.reserve(indices.size());
  for (size_t idx : indices) {
    preds.push_back(blend_predict(net, records[idx], blend_count, blend_median));
  }
  Metrics m = metrics_from_predictions(preds, records, indices);
  EvalReport rep;
  rep.profile_rmse_kt = m.profile_rmse_kt;
  rep.vmax_rmse_kt = m.vmax_rmse_kt;
  rep.r34_rmse_km = m.r34_rmse_km;
  return rep;
}

namespace {

// Unblended validation pass used for per-epoch epoch selection.
double validation_profile_rmse(ProfilerNet& net, const std::vector<SampleRecord>& records,
                               const std::vector<size_t>& val_idx, int batch_size,
                               bool cartesian) {
  net.set_training(false);
  double se = 0.0;
  size_t n = 0;
  for (size_t start = 0; start < val_idx.size(); start += batch_size) {
    size_t end = std::min(val_idx.size(), start + batch_size);
    std::vector<size_t> chunk(val_idx.begin() + start, val_idx.begin() + end);
    Batch b = make_batch(records, chunk, nullptr, cartesian);
    Tensor pred = net.forward(b.images, b.aux);
    for (size_t k = 0; k < chunk.size(); ++k) {
      const SampleRecord& rec = records[chunk[k]];
      if (!rec.profile.valid) continue;
      const double* row = pred.values().data() + k * kProfilePoints;
      for (int j = 0; j < kProfilePoints; ++j) {
        double d = row[j] - rec.profile.speeds_kt[j];
        se += d * d;
      }
      n += kProfilePoints;
    }
  }
  net.set_training(true);
  if (n == 0) throw std::invalid_argument("validation set has no valid profiles");
  return std::sqrt(se / n);
}

}  // namespace

TrainResult train(const TrainConfig& cfg, const std::vector<SampleRecord>& records,
                  const std::vector<size_t>& train_idx, const std::vector<size_t>& val_idx) {
  if (train_idx.empty() || val_idx.empty()) {
    throw std::invalid_argument("train: empty train or validation set");
  }
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (!cfg.cartesian && (cfg.blend_count < 1 || 180 % cfg.blend_count != 0)) {
    throw std::invalid_argument("train: blend_count must divide 180");
  }

  NetConfig ncfg;
  if (cfg.cartesian) {
    const auto& img = records[train_idx[0]].cartesian;
    if (!img) throw std::invalid_argument("train: cartesian mode needs cartesian images");
    ncfg = NetConfig::cartesian_grid(cfg.kernel_angle, cfg.kernel_radius, img->height);
  } else {
    ncfg = NetConfig::polar(cfg.kernel_angle, cfg.kernel_radius);
  }

  ProfilerNet net(ncfg, cfg.seed);
  Adam opt(net.parameters(), cfg.lr);
  Rng shuffle_rng(derive_seed(cfg.seed, 0x5355));
  Rng aug_rng(derive_seed(cfg.seed, 0x4155));
  LossWeights weights{cfg.alpha, cfg.beta};

  std::vector<size_t> order(train_idx);
  EvalReport report;
  double best = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best_state;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    // Fisher-Yates with our own stream keeps runs reproducible.
    for (size_t i = order.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(shuffle_rng.uniform_int(0, static_cast<int>(i) - 1));
      std::swap(order[i - 1], order[j]);
    }

    net.set_training(true);
    size_t start = 0;
    int batch_no = 0;
    while (start < order.size()) {
      size_t end = std::min(order.size(), start + cfg.batch_size);
      // a trailing singleton cannot batch-normalize; fold it into this batch
      if (order.size() - end == 1) end = order.size();
      std::vector<size_t> chunk(order.begin() + start, order.begin() + end);

      std::vector<int> shifts(chunk.size(), 0);
      if (!cfg.cartesian) {
        for (auto& s : shifts) s = aug_rng.uniform_int(0, 179);
      }
      Batch b = make_batch(records, chunk, cfg.cartesian ? nullptr : &shifts, cfg.cartesian);

      opt.zero_grad();
      Tensor pred = net.forward(b.images, b.aux);
      Tensor loss = composite_loss(pred, b.profiles, b.vmax, b.r34, b.valid_rows, b.r34_rows,
                                   weights, cfg.soft_tau);
      double lv = loss.item();
      if (!std::isfinite(lv)) {
        throw TrainDivergedError("training loss became non-finite at epoch " +
                                 std::to_string(epoch) + ", batch " + std::to_string(batch_no) +
                                 " (loss = " + std::to_string(lv) + ")");
      }
      loss.backward();
      opt.step();
      start = end;
      ++batch_no;
    }

    double val_rmse = validation_profile_rmse(net, records, val_idx, cfg.batch_size,
                                              cfg.cartesian);
    report.val_curve.push_back(val_rmse);
    if (val_rmse < best) {
      best = val_rmse;
      report.selected_epoch = epoch;
      best_state = net.state();
    }
  }

  net.set_state(best_state);
  net.set_training(false);

  EvalReport final = evaluate(net, records, val_idx, cfg.cartesian ? 1 : cfg.blend_count,
                              cfg.blend_median);
  final.selected_epoch = report.selected_epoch;
  final.val_curve = std::move(report.val_curve);

  return TrainResult{std::move(net), std::move(final)};
}

Profile mean_profile(const std::vector<SampleRecord>& records,
                     const std::vector<size_t>& indices) {
  Profile mean{};
  size_t n = 0;
  for (size_t idx : indices) {
    const SampleRecord& rec = records[idx];
    if (!rec.profile.valid) continue;
    for (int j = 0; j < kProfilePoints; ++j) mean[j] += rec.profile.speeds_kt[j];
    ++n;
  }
  if (n == 0) throw std::invalid_argument("mean_profile: no valid profiles");
  for (double& v : mean) v /= n;
  return mean;
}

double profile_rmse_of_constant(const Profile& constant,
                                const std::vector<SampleRecord>& records,
                                const std::vector<size_t>& indices) {
  double se = 0.0;
  size_t n = 0;
  for (size_t idx : indices) {
    const SampleRecord& rec = records[idx];
    if (!rec.profile.valid) continue;
    for (int j = 0; j < kProfilePoints; ++j) {
      double d = constant[j] - rec.profile.speeds_kt[j];
      se += d * d;
    }
    n += kProfilePoints;
  }
  if (n == 0) throw std::invalid_argument("profile_rmse_of_constant: no valid profiles");
  return std::sqrt(se / n);
}

std::vector<SweepRow> run_sweep(const std::vector<SweepItem>& items, const TrainConfig& base,
                                const std::vector<SampleRecord>& records,
                                const std::vector<size_t>& train_idx,
                                const std::vector<size_t>& val_idx) {
  std::vector<SweepRow> rows;
  for (size_t i = 0; i < items.size(); ++i) {
    const SweepItem& it = items[i];
    TrainConfig cfg = base;
    cfg.kernel_angle = it.kernel_angle;
    cfg.kernel_radius = it.kernel_radius;
    cfg.alpha = it.alpha;
    cfg.beta = it.beta;
    cfg.cartesian = it.coordinate == "Cartesian";
    cfg.seed = derive_seed(base.seed, i);  // independent runs per config
    TrainResult res = train(cfg, records, train_idx, val_idx);
    rows.push_back(SweepRow{it, std::move(res.report)});
  }
  return rows;
}

namespace {
std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string loss_label(double alpha, double beta) {
  std::string s = "Profile";
  if (alpha > 0.0) s += "+V_max";
  if (beta > 0.0) s += "+R_34";
  return s;
}
}  // namespace

std::string kernel_sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "Coordinate,\"(angle, radial)\",Profile RMSE (knots),V_max RMSE (knots),"
         "R_34 RMSE (km),Selected Epoch\n";
  for (const auto& r : rows) {
    out << r.item.coordinate << ",\"(" << r.item.kernel_angle << ", " << r.item.kernel_radius
        << ")\"," << fmt(r.report.profile_rmse_kt) << ',' << fmt(r.report.vmax_rmse_kt) << ','
        << fmt(r.report.r34_rmse_km) << ',' << r.report.selected_epoch << '\n';
  }
  return out.str();
}

std::string loss_sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream out;
  out << "Loss,alpha,beta,Profile RMSE (knots),V_max RMSE (knots),"
         "R_34 RMSE (km),Selected Epoch\n";
  for (const auto& r : rows) {
    out << loss_label(r.item.alpha, r.item.beta) << ',' << fmt(r.item.alpha) << ','
        << fmt(r.item.beta) << ',' << fmt(r.report.profile_rmse_kt) << ','
        << fmt(r.report.vmax_rmse_kt) << ',' << fmt(r.report.r34_rmse_km) << ','
        << r.report.selected_epoch << '\n';
  }
  return out.str();
}

std::vector<SweepRow> parse_sweep_csv(const std::string& csv_text) {
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("parse_sweep_csv: empty input");
  auto header = split_csv_line(line);
  bool kernel_table = !header.empty() && header[0] == "Coordinate";
  bool loss_table = !header.empty() && header[0] == "Loss";
  if (!kernel_table && !loss_table) {
    throw std::invalid_argument("parse_sweep_csv: unrecognized header");
  }

  std::vector<SweepRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 6 + (loss_table ? 1u : 0u)) {
      throw std::invalid_argument("parse_sweep_csv: bad field count in row '" + line + "'");
    }
    SweepRow r;
    size_t k = 0;
    if (kernel_table) {
      r.item.coordinate = f[k++];
      std::string kern = f[k++];  // "(A, R)"
      if (std::sscanf(kern.c_str(), "(%d, %d)", &r.item.kernel_angle, &r.item.kernel_radius) != 2) {
        throw std::invalid_argument("parse_sweep_csv: bad kernel field '" + kern + "'");
      }
    } else {
      ++k;  // loss label is derived, not stored
      r.item.alpha = std::stod(f[k++]);
      r.item.beta = std::stod(f[k++]);
    }
    r.report.profile_rmse_kt = std::stod(f[k++]);
    r.report.vmax_rmse_kt = std::stod(f[k++]);
    r.report.r34_rmse_km = std::stod(f[k++]);
    r.report.selected_epoch = std::stoi(f[k++]);
    rows.push_back(std::move(r));
  }
  return rows;
}

}  // namespace tcprof
