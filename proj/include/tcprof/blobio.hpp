#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace tcprof {

// Flat little-endian numeric blobs with CRC32 integrity, the storage layer
// under archives and checkpoints. Readers verify size and checksum and throw
// TruncatedError / ChecksumError.

uint32_t write_blob_f32(const std::string& path, std::span<const double> values);
uint32_t write_blob_f64(const std::string& path, std::span<const double> values);

std::vector<double> read_blob_f32(const std::string& path, size_t expected_count,
                                  uint32_t expected_crc);
std::vector<double> read_blob_f64(const std::string& path, size_t expected_count,
                                  uint32_t expected_crc);

bool is_little_endian();

}  // namespace tcprof
