#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace tcprof {

// Deterministic RNG. mt19937 core with hand-rolled scalings so generated
// sequences do not depend on libstdc++ distribution internals.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(static_cast<uint32_t>(seed ^ (seed >> 32))) {}

  uint32_t next_u32() { return gen_(); }

  // [0, 1)
  double uniform() { return next_u32() * (1.0 / 4294967296.0); }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // inclusive on both ends
  int uniform_int(int lo, int hi) {
    int span = hi - lo + 1;
    int k = static_cast<int>(uniform() * span);
    return lo + (k >= span ? span - 1 : k);
  }

  double normal(double mean = 0.0, double sd = 1.0) {
    // Box-Muller, cacheless. u1 in (0,1] keeps the log finite.
    double u1 = (next_u32() + 1.0) * (1.0 / 4294967296.0);
    double u2 = next_u32() * (1.0 / 4294967296.0);
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    return mean + sd * z;
  }

 private:
  std::mt19937 gen_;
};

// Derives an independent stream seed from a master seed (splitmix64 step).
uint64_t derive_seed(uint64_t master, uint64_t stream);

// CRC-32 (IEEE 802.3, reflected 0xEDB88320). crc32("123456789") == 0xCBF43926.
uint32_t crc32(const void* data, size_t n, uint32_t crc = 0);

// Rounds a double through float32, the archive storage precision.
inline double quantize_f32(double v) { return static_cast<double>(static_cast<float>(v)); }
void quantize_f32(std::span<double> xs);

// Calendar timestamp, always UTC.
struct UtcTime {
  int year = 2000;
  int month = 1;
  int day = 1;
  int hour = 0;
  int minute = 0;
  int second = 0;

  // Accepts YYYY-MM-DDTHH:MM[:SS][Z]. Throws std::invalid_argument.
  static UtcTime parse_iso8601(const std::string& s);
  std::string to_iso8601() const;

  int day_of_year() const;  // 1-based
  double hour_of_day() const { return hour + minute / 60.0 + second / 3600.0; }
  bool operator==(const UtcTime&) const = default;
};

bool is_leap_year(int year);

// Minimal CSV: RFC-style quoting for fields containing comma/quote/newline.
std::vector<std::string> split_csv_line(const std::string& line);
std::string csv_escape(const std::string& field);
std::string join_csv_line(const std::vector<std::string>& fields);

std::string read_text_file(const std::string& path);     // throws std::runtime_error
void write_text_file(const std::string& path, const std::string& content);

}  // namespace tcprof
