#pragma once

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tcprof/util.hpp"

namespace tcprof {

enum class Basin { WPAC, EPAC, CPAC, ATLN, IO, SH };
inline constexpr int kNumBasins = 6;

Basin parse_basin(const std::string& s);  // throws std::invalid_argument
std::string basin_name(Basin b);

// One best-track fix. Units: kt, km, degrees. r34 is absent for storms below
// gale strength. Longitude is metadata (used for local solar time).
struct StructuralParams {
  std::string id;
  UtcTime time;
  double latitude = 0.0;
  double longitude = 0.0;
  double vmax_kt = 0.0;
  double rmw_km = 0.0;
  std::optional<double> r34_km;
  Basin basin = Basin::WPAC;
};

// V(r) = 2r(Rm*Vmax + f*Rm^2/2) / (Rm^2 + a*r^b) - f*r/2, everything in kt/km
// units. a and b are tied to this unit system.
struct FittedWindModel {
  double vmax_kt = 0.0;
  double rm_km = 0.0;  // fitted radius of maximum wind
  double a = 1.0;
  double b = 2.0;
  double f_kt_per_km = 0.0;
};

inline constexpr int kProfilePoints = 151;  // radii 0, 5, ..., 750 km
inline constexpr double kProfileStepKm = 5.0;
inline constexpr double kGaleKt = 34.0;
inline constexpr double kFitTolKt = 1e-3;
inline constexpr int kFitMaxIter = 200;

enum class ProfileQuality { good, uncertain };

struct WindProfile {
  std::array<double, kProfilePoints> speeds_kt{};
  bool valid = false;
  ProfileQuality quality = ProfileQuality::good;
  double rmw_shift_km = 0.0;  // |best-track RMW - fitted RMW|
};

struct QualityStats {
  double sigma_km = 0.0;      // population SD of the RMW shifts
  double threshold_km = 0.0;  // 2 * sigma
  double fraction_within = 0.0;
};

// Coriolis parameter 2*Omega*sin(|lat|) expressed in kt/km. The absolute value
// keeps Southern-Hemisphere profiles on the same positive-f form.
double coriolis_kt_per_km(double latitude_deg);

double eval_wind(const FittedWindModel& m, double r_km);
double eval_wind_slope(const FittedWindModel& m, double r_km);  // dV/dr

// Fits (a, b, rm) so that V(rm) = vmax is the profile maximum and V(r34) = 34;
// vmax and r34 themselves are never altered. Throws NoValidProfileError when
// vmax < 34 kt or r34 is absent, FitDivergedError when no rm in
// [2 km, min(r34-1, 200) km] reaches 34 kt at r34.
FittedWindModel fit_wind_model(const StructuralParams& p);

// Samples the fitted model on the 5-km grid, clamped at >= 0. A fix that
// cannot carry a profile (vmax < 34 or missing r34) yields valid=false with
// zeroed speeds; FitDivergedError propagates.
WindProfile build_profile_label(const StructuralParams& p);

QualityStats quality_stats(const std::vector<double>& shifts_km);

// Marks profiles whose shift exceeds stats.threshold_km as uncertain.
void apply_quality_flags(std::span<WindProfile> profiles, const QualityStats& stats);

}  // namespace tcprof
