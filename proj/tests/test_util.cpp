#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "tcprof/util.hpp"

using namespace tcprof;

TEST_CASE("rng is deterministic per seed") {
  Rng a(42), b(42), c(43);
  for (int i = 0; i < 100; ++i) {
    double x = a.uniform();
    CHECK(x == b.uniform());
    CHECK(x >= 0.0);
    CHECK(x < 1.0);
  }
  bool differs = false;
  Rng a2(42);
  for (int i = 0; i < 10; ++i) differs |= a2.uniform() != c.uniform();
  CHECK(differs);
}

TEST_CASE("rng normal has sane moments") {
  Rng rng(7);
  double sum = 0.0, sq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    double v = rng.normal();
    sum += v;
    sq += v * v;
  }
  double mean = sum / n;
  double var = sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.05);
  CHECK(std::abs(var - 1.0) < 0.05);
}

TEST_CASE("crc32 known vector") {
  const char* s = "123456789";
  CHECK(crc32(s, 9) == 0xCBF43926u);
  CHECK(crc32(s, 0) == 0u);
}

TEST_CASE("iso8601 round trip and day-of-year") {
  UtcTime t = UtcTime::parse_iso8601("2016-03-01T06:30:00Z");
  CHECK(t.year == 2016);
  CHECK(t.month == 3);
  CHECK(t.day == 1);
  CHECK(t.day_of_year() == 61);  // leap year
  CHECK(t.to_iso8601() == "2016-03-01T06:30:00Z");

  UtcTime t2 = UtcTime::parse_iso8601("2015-03-01T00:00");
  CHECK(t2.day_of_year() == 60);
  CHECK(t2.second == 0);

  CHECK_THROWS_AS(UtcTime::parse_iso8601("garbage"), std::invalid_argument);
  CHECK_THROWS_AS(UtcTime::parse_iso8601("2015-13-01T00:00:00Z"), std::invalid_argument);
  CHECK_THROWS_AS(UtcTime::parse_iso8601("2015-02-29T00:00:00Z"), std::invalid_argument);
}

TEST_CASE("csv quoting round trip") {
  std::vector<std::string> fields{"plain", "with,comma", "with \"quotes\"", ""};
  std::string line = join_csv_line(fields);
  CHECK(split_csv_line(line) == fields);

  auto parsed = split_csv_line("a,\"(4, 3)\",b");
  REQUIRE(parsed.size() == 3);
  CHECK(parsed[1] == "(4, 3)");
}

TEST_CASE("quantize_f32 is idempotent") {
  double v = 0.1234567890123;
  double q = quantize_f32(v);
  CHECK(q != v);
  CHECK(quantize_f32(q) == q);
}

TEST_CASE("derive_seed separates streams") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(5, 3) == derive_seed(5, 3));
}
