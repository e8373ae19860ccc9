#include "tcprof/blobio.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "tcprof/errors.hpp"
#include "tcprof/util.hpp"

namespace tcprof {

bool is_little_endian() { return std::endian::native == std::endian::little; }

namespace {

template <typename T>
void byteswap_buffer(std::vector<T>& buf) {
  for (T& v : buf) {
    auto* p = reinterpret_cast<unsigned char*>(&v);
    for (size_t i = 0; i < sizeof(T) / 2; ++i) std::swap(p[i], p[sizeof(T) - 1 - i]);
  }
}

template <typename T>
uint32_t write_blob(const std::string& path, std::span<const double> values) {
  std::vector<T> buf(values.size());
  for (size_t i = 0; i < values.size(); ++i) buf[i] = static_cast<T>(values[i]);
  if (!is_little_endian()) byteswap_buffer(buf);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ArchiveError("cannot write blob: " + path);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size() * sizeof(T)));
  if (!out) throw ArchiveError("short write on blob: " + path);
  return crc32(buf.data(), buf.size() * sizeof(T));
}

template <typename T>
std::vector<double> read_blob(const std::string& path, size_t expected_count,
                              uint32_t expected_crc) {
  std::error_code ec;
  auto size = std::filesystem::file_size(path, ec);
  if (ec) throw ArchiveError("cannot stat blob: " + path);
  if (size != expected_count * sizeof(T)) {
    throw TruncatedError("blob " + path + " holds " + std::to_string(size) +
                         " bytes, expected " + std::to_string(expected_count * sizeof(T)));
  }

  std::vector<T> buf(expected_count);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArchiveError("cannot open blob: " + path);
  in.read(reinterpret_cast<char*>(buf.data()),
          static_cast<std::streamsize>(buf.size() * sizeof(T)));
  if (static_cast<size_t>(in.gcount()) != buf.size() * sizeof(T)) {
    throw TruncatedError("short read on blob: " + path);
  }

  uint32_t crc = crc32(buf.data(), buf.size() * sizeof(T));
  if (crc != expected_crc) {
    throw ChecksumError("blob " + path + " checksum mismatch");
  }
  if (!is_little_endian()) byteswap_buffer(buf);

  std::vector<double> out(expected_count);
  for (size_t i = 0; i < expected_count; ++i) out[i] = static_cast<double>(buf[i]);
  return out;
}

}  // namespace

uint32_t write_blob_f32(const std::string& path, std::span<const double> values) {
  return write_blob<float>(path, values);
}
uint32_t write_blob_f64(const std::string& path, std::span<const double> values) {
  return write_blob<double>(path, values);
}
std::vector<double> read_blob_f32(const std::string& path, size_t expected_count,
                                  uint32_t expected_crc) {
  return read_blob<float>(path, expected_count, expected_crc);
}
std::vector<double> read_blob_f64(const std::string& path, size_t expected_count,
                                  uint32_t expected_crc) {
  return read_blob<double>(path, expected_count, expected_crc);
}

}  // namespace tcprof
