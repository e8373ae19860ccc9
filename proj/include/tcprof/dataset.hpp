#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "tcprof/geometry.hpp"
#include "tcprof/wind_model.hpp"

namespace tcprof {

inline constexpr int kAuxDim = 10;
inline constexpr int kImageChannels = 2;  // IR1, PMW

// 10 auxiliary features: sin/cos of the day-of-year angle, sin/cos of the
// local-solar-time angle, one-hot basin over {WPAC,EPAC,CPAC,ATLN,IO,SH}.
struct AuxFeatures {
  std::array<double, kAuxDim> v{};
};

AuxFeatures encode_aux(const StructuralParams& p);

struct SampleRecord {
  std::string id;
  StructuralParams params;
  WindProfile profile;  // may be invalid (valid=false)
  AuxFeatures aux;
  PolarImage polar;                          // (IR1, PMW) x 180 x 103
  std::optional<CartesianImage> cartesian;   // kept for grid-ablation runs
};

// Year-based partition: train 2004-2014, validation 2015-2016, test 2017-2018.
struct DatasetSplit {
  std::vector<size_t> train, validation, test;
};

enum class YearPolicy { drop, error };

DatasetSplit split_by_year(const std::vector<SampleRecord>& records,
                           YearPolicy policy = YearPolicy::drop);

// Synthetic storm generator. Channel maps are documented constants so tests
// can invert them: IR1 = ir_base - ir_per_kt*wind + band + noise (a
// brightness-temperature proxy, colder where winds are strong), PMW =
// pmw_per_kt*wind + band + noise clamped at >= 0 (a rain-rate proxy).
// The band term is a logarithmic-spiral modulation; both grids are rendered
// independently from the same underlying wind field.
struct SynthConfig {
  double weak_fraction = 0.54;  // P(vmax < 34 kt); 0.54 mirrors a 46% valid-profile rate
  double vmax_weak_min = 20.0, vmax_weak_max = 33.9;
  double vmax_strong_min = 35.0, vmax_strong_max = 160.0;
  double rmw_min = 10.0, rmw_max = 80.0;
  double r34_margin_km = 20.0, r34_max_km = 500.0;
  double lat_min = 5.0, lat_max = 30.0;
  int year_min = 2004, year_max = 2018;

  double ir_base = 280.0, ir_per_kt = 0.9;
  double pmw_per_kt = 0.15;
  double band_amp_ir = 6.0, band_amp_pmw = 0.8;
  int band_arms = 2;
  double band_pitch_km = 80.0;
  double noise_ir = 2.0, noise_pmw = 0.25;

  bool render_cartesian = true;
  int cart_size = 128;
  double pixel_spacing_km = kDefaultPixelSpacingKm;
};

SampleRecord synth_storm(uint64_t seed, const SynthConfig& cfg = {});
std::vector<SampleRecord> synth_dataset(uint64_t seed, int count, const SynthConfig& cfg = {});

// Archive: a directory holding manifest.json plus one little-endian float32
// blob per array field. Round-trips are bit-exact; integrity failures raise
// ChecksumError / VersionError / TruncatedError.
void save_archive(const std::vector<SampleRecord>& records, const std::string& dir);
std::vector<SampleRecord> load_archive(const std::string& dir);

// Per-channel means over finite polar cells (for NaN imputation at
// archive-build time; the reference subset is typically the training split).
std::vector<double> polar_channel_means(const std::vector<SampleRecord>& records);
void impute_nan(std::vector<SampleRecord>& records, const std::vector<double>& channel_means);

// Best-track CSV: id,timestamp,lat,lon,vmax_kt,rmw_km,r34_km,basin with an
// optional header row; empty r34_km marks an absent radius.
struct CsvReport {
  size_t parsed = 0;
  size_t skipped = 0;
  std::vector<std::string> messages;
};

std::vector<StructuralParams> read_best_track_csv(const std::string& path, CsvReport* report);
void write_best_track_csv(const std::string& path, const std::vector<StructuralParams>& fixes);

}  // namespace tcprof
