#include "tcprof/wind_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "tcprof/errors.hpp"

namespace tcprof {

Basin parse_basin(const std::string& s) {
  if (s == "WPAC") return Basin::WPAC;
  if (s == "EPAC") return Basin::EPAC;
  if (s == "CPAC") return Basin::CPAC;
  if (s == "ATLN") return Basin::ATLN;
  if (s == "IO") return Basin::IO;
  if (s == "SH") return Basin::SH;
  throw std::invalid_argument("unknown basin: '" + s + "'");
}

std::string basin_name(Basin b) {
  switch (b) {
    case Basin::WPAC: return "WPAC";
    case Basin::EPAC: return "EPAC";
    case Basin::CPAC: return "CPAC";
    case Basin::ATLN: return "ATLN";
    case Basin::IO: return "IO";
    case Basin::SH: return "SH";
  }
  throw std::invalid_argument("bad basin value");
}

namespace {
constexpr double kEarthOmega = 7.2921e-5;    // s^-1
constexpr double kMetersPerSecPerKt = 0.514444;
constexpr double kDeg2Rad = M_PI / 180.0;
}  // namespace

double coriolis_kt_per_km(double latitude_deg) {
  if (!(std::abs(latitude_deg) <= 90.0)) {
    throw std::invalid_argument("latitude out of range: " + std::to_string(latitude_deg));
  }
  double f_si = 2.0 * kEarthOmega * std::sin(std::abs(latitude_deg) * kDeg2Rad);
  return f_si * 1000.0 / kMetersPerSecPerKt;
}

double eval_wind(const FittedWindModel& m, double r_km) {
  const double rm = m.rm_km;
  const double f = m.f_kt_per_km;
  const double num = 2.0 * r_km * (rm * m.vmax_kt + 0.5 * f * rm * rm);
  const double den = rm * rm + m.a * std::pow(r_km, m.b);
  return num / den - 0.5 * f * r_km;
}

double eval_wind_slope(const FittedWindModel& m, double r_km) {
  const double rm = m.rm_km;
  const double f = m.f_kt_per_km;
  const double k = 2.0 * (rm * m.vmax_kt + 0.5 * f * rm * rm);
  const double rb = std::pow(r_km, m.b);
  const double den = rm * rm + m.a * rb;
  // d/dr [k*r/den] = k*(den - r*a*b*r^(b-1))/den^2 = k*(rm^2 + a*(1-b)*r^b)/den^2
  return k * (rm * rm + m.a * (1.0 - m.b) * rb) / (den * den) - 0.5 * f;
}

namespace {
// With rm fixed, the two peak conditions V(rm)=vmax and dV/dr(rm)=0 pin a and
// b exactly: the first reduces to a*rm^b = rm^2, and substituting that into
// the second gives b = 2 - 2*f*rm / (2*vmax + f*rm).
FittedWindModel model_for_rm(double vmax, double f, double rm) {
  FittedWindModel m;
  m.vmax_kt = vmax;
  m.f_kt_per_km = f;
  m.rm_km = rm;
  m.b = 2.0 - 2.0 * f * rm / (2.0 * vmax + f * rm);
  m.a = std::pow(rm, 2.0 - m.b);
  return m;
}
}  // namespace

FittedWindModel fit_wind_model(const StructuralParams& p) {
  if (p.vmax_kt < kGaleKt) {
    throw NoValidProfileError("no valid profile: vmax " + std::to_string(p.vmax_kt) +
                              " kt is below 34 kt");
  }
  if (!p.r34_km) {
    throw NoValidProfileError("no valid profile: r34 is absent");
  }
  const double vmax = p.vmax_kt;
  const double r34 = *p.r34_km;
  const double f = coriolis_kt_per_km(p.latitude);

  const double lo = 2.0;
  const double hi = std::min(r34 - 1.0, 200.0);
  if (!(hi > lo)) {
    throw FitDivergedError("fit diverged: r34 " + std::to_string(r34) +
                           " km leaves no room for rm");
  }

  auto gale_misfit = [&](double rm) { return eval_wind(model_for_rm(vmax, f, rm), r34) - kGaleKt; };

  double glo = gale_misfit(lo);
  double ghi = gale_misfit(hi);
  if (glo > 0.0 == ghi > 0.0) {
    // V(r34) is monotone in rm on the bracket; no sign change means no root.
    throw FitDivergedError("fit diverged: V(r34) cannot reach 34 kt for rm in [2, " +
                           std::to_string(hi) + "] km (vmax " + std::to_string(vmax) +
                           " kt, r34 " + std::to_string(r34) + " km)");
  }

  double a = lo, b = hi, ga = glo;
  for (int it = 0; it < kFitMaxIter; ++it) {
    double mid = 0.5 * (a + b);
    double gm = gale_misfit(mid);
    if (std::abs(gm) <= kFitTolKt) return model_for_rm(vmax, f, mid);
    if ((gm > 0.0) == (ga > 0.0)) {
      a = mid;
      ga = gm;
    } else {
      b = mid;
    }
  }
  throw FitDivergedError("fit diverged: no convergence after " + std::to_string(kFitMaxIter) +
                         " iterations");
}

WindProfile build_profile_label(const StructuralParams& p) {
  WindProfile prof;
  FittedWindModel model;
  try {
    model = fit_wind_model(p);
  } catch (const NoValidProfileError&) {
    prof.valid = false;
    return prof;
  }
  for (int j = 0; j < kProfilePoints; ++j) {
    prof.speeds_kt[j] = std::max(0.0, eval_wind(model, j * kProfileStepKm));
  }
  prof.valid = true;
  prof.rmw_shift_km = std::abs(p.rmw_km - model.rm_km);
  return prof;
}

QualityStats quality_stats(const std::vector<double>& shifts_km) {
  if (shifts_km.empty()) throw std::invalid_argument("quality_stats: empty shift list");
  double mean = 0.0;
  for (double s : shifts_km) mean += s;
  mean /= shifts_km.size();
  double var = 0.0;
  for (double s : shifts_km) var += (s - mean) * (s - mean);
  var /= shifts_km.size();  // population variance: dataset-level statistic

  QualityStats st;
  st.sigma_km = std::sqrt(var);
  st.threshold_km = 2.0 * st.sigma_km;
  if (st.sigma_km == 0.0) {
    // No dispersion: nothing is an outlier.
    st.fraction_within = 1.0;
    return st;
  }
  size_t within = 0;
  for (double s : shifts_km) {
    if (s <= st.threshold_km) ++within;
  }
  st.fraction_within = static_cast<double>(within) / shifts_km.size();
  return st;
}

void apply_quality_flags(std::span<WindProfile> profiles, const QualityStats& stats) {
  for (WindProfile& p : profiles) {
    bool outlier = stats.sigma_km > 0.0 && p.rmw_shift_km > stats.threshold_km;
    p.quality = (p.valid && outlier) ? ProfileQuality::uncertain : ProfileQuality::good;
  }
}

}  // namespace tcprof
