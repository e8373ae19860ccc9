#include "tcprof/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "tcprof/blobio.hpp"
#include "tcprof/errors.hpp"
#include "tcprof/util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace tcprof {

namespace {
constexpr double kTwoPi = 6.283185307179586;
}

AuxFeatures encode_aux(const StructuralParams& p) {
  AuxFeatures a;
  double day_angle = kTwoPi * p.time.day_of_year() / 365.25;
  a.v[0] = std::sin(day_angle);
  a.v[1] = std::cos(day_angle);

  // Local solar time from UTC plus longitude; physically meaningful for
  // convection, unlike civil timezones.
  double lst = p.time.hour_of_day() + p.longitude / 15.0;
  lst = std::fmod(std::fmod(lst, 24.0) + 24.0, 24.0);
  double lst_angle = kTwoPi * lst / 24.0;
  a.v[2] = std::sin(lst_angle);
  a.v[3] = std::cos(lst_angle);

  a.v[4 + static_cast<int>(p.basin)] = 1.0;
  return a;
}

DatasetSplit split_by_year(const std::vector<SampleRecord>& records, YearPolicy policy) {
  DatasetSplit s;
  for (size_t i = 0; i < records.size(); ++i) {
    int year = records[i].params.time.year;
    if (year >= 2004 && year <= 2014) s.train.push_back(i);
    else if (year >= 2015 && year <= 2016) s.validation.push_back(i);
    else if (year >= 2017 && year <= 2018) s.test.push_back(i);
    else if (policy == YearPolicy::error) {
      throw std::invalid_argument("record '" + records[i].id + "' year " +
                                  std::to_string(year) + " is outside 2004-2018");
    }
  }
  return s;
}

namespace {

// Shared field formula for both grids. theta in radians, r in km.
double render_channel(const SynthConfig& cfg, const FittedWindModel& truth, int channel,
                      double theta, double r_km, double band_phase) {
  double wind = std::max(0.0, eval_wind(truth, r_km));
  double band = std::sin(cfg.band_arms * theta + kTwoPi * r_km / cfg.band_pitch_km + band_phase);
  if (channel == 0) return cfg.ir_base - cfg.ir_per_kt * wind + cfg.band_amp_ir * band;
  return cfg.pmw_per_kt * wind + cfg.band_amp_pmw * band;
}

}  // namespace

SampleRecord synth_storm(uint64_t seed, const SynthConfig& cfg) {
  Rng rng(derive_seed(seed, 0));

  SampleRecord rec;
  char idbuf[32];
  std::snprintf(idbuf, sizeof(idbuf), "SYN%010llu", static_cast<unsigned long long>(seed));
  rec.id = idbuf;

  StructuralParams& p = rec.params;
  p.id = rec.id;
  p.basin = static_cast<Basin>(rng.uniform_int(0, kNumBasins - 1));
  double lat = rng.uniform(cfg.lat_min, cfg.lat_max);
  p.latitude = p.basin == Basin::SH ? -lat : lat;
  p.longitude = rng.uniform(-180.0, 180.0);
  p.time.year = rng.uniform_int(cfg.year_min, cfg.year_max);
  p.time.month = rng.uniform_int(1, 12);
  p.time.day = rng.uniform_int(1, 28);
  p.time.hour = 3 * rng.uniform_int(0, 7);  // 3-hourly fixes
  p.time.minute = 0;
  p.time.second = 0;
  p.rmw_km = rng.uniform(cfg.rmw_min, cfg.rmw_max);

  bool weak = rng.uniform() < cfg.weak_fraction;
  FittedWindModel truth;
  if (weak) {
    p.vmax_kt = rng.uniform(cfg.vmax_weak_min, cfg.vmax_weak_max);
    p.r34_km.reset();
    // Below gale strength there is nothing to fit; render from the plain
    // a=1, b=2 vortex centered on the best-track RMW.
    truth = FittedWindModel{p.vmax_kt, p.rmw_km, 1.0, 2.0, coriolis_kt_per_km(p.latitude)};
  } else {
    p.vmax_kt = rng.uniform(cfg.vmax_strong_min, cfg.vmax_strong_max);
    bool fitted = false;
    for (int attempt = 0; attempt < 20 && !fitted; ++attempt) {
      p.r34_km = rng.uniform(p.rmw_km + cfg.r34_margin_km, cfg.r34_max_km);
      try {
        truth = fit_wind_model(p);
        fitted = true;
      } catch (const FitDivergedError&) {
        // redraw a smaller size
      }
    }
    if (!fitted) {
      p.r34_km = p.rmw_km + cfg.r34_margin_km;
      truth = fit_wind_model(p);  // always converges this close to the RMW
    }
  }

  rec.profile = build_profile_label(p);
  rec.aux = encode_aux(p);

  double band_phase = rng.uniform(0.0, kTwoPi);

  rec.polar = PolarImage::zeros(kImageChannels);
  for (int c = 0; c < kImageChannels; ++c) {
    for (int i = 0; i < rec.polar.n_angles; ++i) {
      double theta = i * kDegPerAngleIndex * M_PI / 180.0;
      for (int j = 0; j < rec.polar.n_radii; ++j) {
        double v = render_channel(cfg, truth, c, theta, j * kKmPerRadiusIndex, band_phase);
        v += (c == 0 ? cfg.noise_ir : cfg.noise_pmw) * rng.normal();
        if (c == 1) v = std::max(0.0, v);
        rec.polar.at(c, i, j) = v;
      }
    }
  }

  if (cfg.render_cartesian) {
    CartesianImage cart = CartesianImage::zeros(kImageChannels, cfg.cart_size, cfg.cart_size,
                                                cfg.pixel_spacing_km);
    for (int c = 0; c < kImageChannels; ++c) {
      for (int y = 0; y < cart.height; ++y) {
        for (int x = 0; x < cart.width; ++x) {
          double dx = x - cart.center_x();
          double dy = y - cart.center_y();
          double r_km = std::hypot(dx, dy) * cart.pixel_spacing_km;
          double theta = std::atan2(dy, dx);
          double v = render_channel(cfg, truth, c, theta, r_km, band_phase);
          v += (c == 0 ? cfg.noise_ir : cfg.noise_pmw) * rng.normal();
          if (c == 1) v = std::max(0.0, v);
          cart.at(c, y, x) = v;
        }
      }
    }
    rec.cartesian = std::move(cart);
  }

  // Records carry float32 data so archive round-trips are bit-exact.
  quantize_f32(rec.polar.data);
  if (rec.cartesian) quantize_f32(rec.cartesian->data);
  quantize_f32(rec.profile.speeds_kt);
  quantize_f32(rec.aux.v);
  return rec;
}

std::vector<SampleRecord> synth_dataset(uint64_t seed, int count, const SynthConfig& cfg) {
  std::vector<SampleRecord> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) out.push_back(synth_storm(derive_seed(seed, i), cfg));
  return out;
}

namespace {

constexpr const char* kArchiveMagic = "tcprof-archive";
constexpr int kArchiveVersion = 1;

json params_to_json(const StructuralParams& p) {
  json j;
  j["id"] = p.id;
  j["time"] = p.time.to_iso8601();
  j["lat"] = p.latitude;
  j["lon"] = p.longitude;
  j["vmax_kt"] = p.vmax_kt;
  j["rmw_km"] = p.rmw_km;
  if (p.r34_km) j["r34_km"] = *p.r34_km;
  else j["r34_km"] = nullptr;
  j["basin"] = basin_name(p.basin);
  return j;
}

StructuralParams params_from_json(const json& j) {
  StructuralParams p;
  p.id = j.at("id").get<std::string>();
  p.time = UtcTime::parse_iso8601(j.at("time").get<std::string>());
  p.latitude = j.at("lat").get<double>();
  p.longitude = j.at("lon").get<double>();
  p.vmax_kt = j.at("vmax_kt").get<double>();
  p.rmw_km = j.at("rmw_km").get<double>();
  if (!j.at("r34_km").is_null()) p.r34_km = j.at("r34_km").get<double>();
  p.basin = parse_basin(j.at("basin").get<std::string>());
  return p;
}

}  // namespace

void save_archive(const std::vector<SampleRecord>& records, const std::string& dir) {
  fs::create_directories(dir);

  bool has_images = !records.empty() && records.front().polar.channels > 0;
  bool has_cartesian = !records.empty() && records.front().cartesian.has_value();
  for (const auto& r : records) {
    if ((r.polar.channels > 0) != has_images || r.cartesian.has_value() != has_cartesian) {
      throw std::invalid_argument("save_archive: records mix image layouts");
    }
  }

  const size_t n = records.size();
  const size_t polar_stride = static_cast<size_t>(kImageChannels) * kPolarAngles * kPolarRadii;
  const size_t profile_stride = kProfilePoints;
  const size_t aux_stride = kAuxDim;
  size_t cart_stride = 0;
  if (has_cartesian) {
    const auto& c = *records.front().cartesian;
    cart_stride = static_cast<size_t>(c.channels) * c.height * c.width;
  }

  std::vector<double> profiles, aux, polar, cart;
  profiles.reserve(n * profile_stride);
  aux.reserve(n * aux_stride);
  if (has_images) polar.reserve(n * polar_stride);
  if (has_cartesian) cart.reserve(n * cart_stride);

  json recs = json::array();
  for (const auto& r : records) {
    json jr = params_to_json(r.params);
    jr["valid"] = r.profile.valid;
    jr["quality"] = r.profile.quality == ProfileQuality::good ? "good" : "uncertain";
    jr["rmw_shift_km"] = r.profile.rmw_shift_km;
    recs.push_back(std::move(jr));

    profiles.insert(profiles.end(), r.profile.speeds_kt.begin(), r.profile.speeds_kt.end());
    aux.insert(aux.end(), r.aux.v.begin(), r.aux.v.end());
    if (has_images) {
      if (r.polar.data.size() != polar_stride) {
        throw std::invalid_argument("save_archive: unexpected polar image shape for '" + r.id + "'");
      }
      polar.insert(polar.end(), r.polar.data.begin(), r.polar.data.end());
    }
    if (has_cartesian) {
      if (r.cartesian->data.size() != cart_stride) {
        throw std::invalid_argument("save_archive: unexpected cartesian shape for '" + r.id + "'");
      }
      cart.insert(cart.end(), r.cartesian->data.begin(), r.cartesian->data.end());
    }
  }

  json blobs;
  auto add_blob = [&](const char* name, const char* file, const std::vector<double>& values,
                      size_t stride) {
    uint32_t crc = write_blob_f32((fs::path(dir) / file).string(), values);
    blobs[name] = {{"file", file}, {"dtype", "f32"}, {"record_stride", stride},
                   {"floats", values.size()}, {"crc32", crc}};
  };
  add_blob("profile", "profile.f32", profiles, profile_stride);
  add_blob("aux", "aux.f32", aux, aux_stride);
  if (has_images) add_blob("polar", "polar.f32", polar, polar_stride);
  if (has_cartesian) add_blob("cartesian", "cartesian.f32", cart, cart_stride);

  json manifest;
  manifest["format"] = kArchiveMagic;
  manifest["version"] = kArchiveVersion;
  manifest["count"] = n;
  manifest["has_images"] = has_images;
  manifest["has_cartesian"] = has_cartesian;
  manifest["channels"] = kImageChannels;
  manifest["angles"] = kPolarAngles;
  manifest["radii"] = kPolarRadii;
  if (has_cartesian) {
    manifest["cart_size"] = records.front().cartesian->height;
    manifest["pixel_spacing_km"] = records.front().cartesian->pixel_spacing_km;
  }
  manifest["blobs"] = blobs;
  manifest["records"] = recs;

  write_text_file((fs::path(dir) / "manifest.json").string(), manifest.dump(2) + "\n");
}

std::vector<SampleRecord> load_archive(const std::string& dir) {
  fs::path mpath = fs::path(dir) / "manifest.json";
  if (!fs::exists(mpath)) throw ArchiveError("no manifest.json under " + dir);

  json manifest;
  try {
    manifest = json::parse(read_text_file(mpath.string()));
  } catch (const json::parse_error& e) {
    throw ChecksumError("unparseable manifest " + mpath.string() + ": " + e.what());
  }

  if (!manifest.contains("format") || manifest["format"] != kArchiveMagic) {
    throw ChecksumError("bad archive magic in " + mpath.string());
  }
  if (!manifest.contains("version") || manifest["version"].get<int>() != kArchiveVersion) {
    throw VersionError("unsupported archive version in " + mpath.string());
  }

  const size_t n = manifest.at("count").get<size_t>();
  const bool has_images = manifest.at("has_images").get<bool>();
  const bool has_cartesian = manifest.at("has_cartesian").get<bool>();

  auto read_field = [&](const char* name) {
    const json& b = manifest.at("blobs").at(name);
    size_t floats = b.at("floats").get<size_t>();
    size_t stride = b.at("record_stride").get<size_t>();
    if (floats != n * stride) {
      throw TruncatedError(std::string("blob '") + name + "' float count does not match record count");
    }
    auto values = read_blob_f32((fs::path(dir) / b.at("file").get<std::string>()).string(),
                                floats, b.at("crc32").get<uint32_t>());
    return std::make_pair(std::move(values), stride);
  };

  auto [profiles, profile_stride] = read_field("profile");
  auto [aux, aux_stride] = read_field("aux");
  if (profile_stride != kProfilePoints || aux_stride != kAuxDim) {
    throw ArchiveError("unexpected record strides in " + mpath.string());
  }

  std::vector<double> polar;
  size_t polar_stride = 0;
  if (has_images) std::tie(polar, polar_stride) = read_field("polar");

  std::vector<double> cart;
  size_t cart_stride = 0;
  int cart_size = 0;
  double spacing = kDefaultPixelSpacingKm;
  if (has_cartesian) {
    std::tie(cart, cart_stride) = read_field("cartesian");
    cart_size = manifest.at("cart_size").get<int>();
    spacing = manifest.at("pixel_spacing_km").get<double>();
  }

  const json& recs = manifest.at("records");
  if (recs.size() != n) throw TruncatedError("manifest record list does not match count");

  std::vector<SampleRecord> out(n);
  for (size_t i = 0; i < n; ++i) {
    SampleRecord& r = out[i];
    r.params = params_from_json(recs[i]);
    r.id = r.params.id;
    r.profile.valid = recs[i].at("valid").get<bool>();
    r.profile.quality = recs[i].at("quality").get<std::string>() == "uncertain"
                            ? ProfileQuality::uncertain
                            : ProfileQuality::good;
    r.profile.rmw_shift_km = recs[i].at("rmw_shift_km").get<double>();
    std::copy_n(profiles.begin() + i * kProfilePoints, kProfilePoints, r.profile.speeds_kt.begin());
    std::copy_n(aux.begin() + i * kAuxDim, kAuxDim, r.aux.v.begin());
    if (has_images) {
      r.polar = PolarImage::zeros(kImageChannels);
      std::copy_n(polar.begin() + i * polar_stride, polar_stride, r.polar.data.begin());
    }
    if (has_cartesian) {
      CartesianImage c = CartesianImage::zeros(kImageChannels, cart_size, cart_size, spacing);
      std::copy_n(cart.begin() + i * cart_stride, cart_stride, c.data.begin());
      r.cartesian = std::move(c);
    }
  }
  return out;
}

std::vector<double> polar_channel_means(const std::vector<SampleRecord>& records) {
  std::vector<double> sum(kImageChannels, 0.0);
  std::vector<size_t> count(kImageChannels, 0);
  for (const auto& r : records) {
    for (int c = 0; c < r.polar.channels; ++c) {
      for (int a = 0; a < r.polar.n_angles; ++a) {
        for (int j = 0; j < r.polar.n_radii; ++j) {
          double v = r.polar.at(c, a, j);
          if (std::isfinite(v)) {
            sum[c] += v;
            ++count[c];
          }
        }
      }
    }
  }
  std::vector<double> means(kImageChannels, 0.0);
  for (int c = 0; c < kImageChannels; ++c) means[c] = count[c] ? sum[c] / count[c] : 0.0;
  return means;
}

void impute_nan(std::vector<SampleRecord>& records, const std::vector<double>& channel_means) {
  for (auto& r : records) {
    for (int c = 0; c < r.polar.channels; ++c) {
      double fill = quantize_f32(channel_means.at(c));
      for (int a = 0; a < r.polar.n_angles; ++a) {
        for (int j = 0; j < r.polar.n_radii; ++j) {
          if (!std::isfinite(r.polar.at(c, a, j))) r.polar.at(c, a, j) = fill;
        }
      }
    }
  }
}

std::vector<StructuralParams> read_best_track_csv(const std::string& path, CsvReport* report) {
  std::ifstream in(path);
  if (!in) throw ArchiveError("cannot open best-track CSV: " + path);

  CsvReport local;
  CsvReport& rep = report ? *report : local;
  std::vector<StructuralParams> fixes;

  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto fields = split_csv_line(line);
    if (lineno == 1 && !fields.empty() && fields[0] == "id") continue;  // header
    if (fields.size() != 8) {
      ++rep.skipped;
      rep.messages.push_back("line " + std::to_string(lineno) + ": expected 8 fields, got " +
                             std::to_string(fields.size()));
      continue;
    }
    try {
      StructuralParams p;
      p.id = fields[0];
      p.time = UtcTime::parse_iso8601(fields[1]);
      p.latitude = std::stod(fields[2]);
      p.longitude = std::stod(fields[3]);
      p.vmax_kt = std::stod(fields[4]);
      p.rmw_km = std::stod(fields[5]);
      if (!fields[6].empty()) p.r34_km = std::stod(fields[6]);
      p.basin = parse_basin(fields[7]);
      if (!(p.vmax_kt > 0) || !(p.rmw_km > 0) || !(std::abs(p.latitude) <= 90.0)) {
        throw std::invalid_argument("field out of physical range");
      }
      if (p.r34_km && !(*p.r34_km > p.rmw_km)) {
        throw std::invalid_argument("r34 must exceed rmw");
      }
      fixes.push_back(std::move(p));
      ++rep.parsed;
    } catch (const std::exception& e) {
      ++rep.skipped;
      rep.messages.push_back("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return fixes;
}

void write_best_track_csv(const std::string& path, const std::vector<StructuralParams>& fixes) {
  std::ostringstream out;
  out << "id,timestamp,lat,lon,vmax_kt,rmw_km,r34_km,basin\n";
  for (const auto& p : fixes) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%.4f,%.4f,%.3f,%.3f,", p.latitude, p.longitude, p.vmax_kt,
                  p.rmw_km);
    out << csv_escape(p.id) << ',' << p.time.to_iso8601() << ',' << buf;
    if (p.r34_km) {
      std::snprintf(buf, sizeof(buf), "%.3f", *p.r34_km);
      out << buf;
    }
    out << ',' << basin_name(p.basin) << '\n';
  }
  write_text_file(path, out.str());
}

}  // namespace tcprof
