#pragma once

#include <stdexcept>
#include <string>

namespace tcprof {

// Wind-model fitting.
struct NoValidProfileError : std::runtime_error {
  explicit NoValidProfileError(const std::string& msg) : std::runtime_error(msg) {}
};
struct FitDivergedError : std::runtime_error {
  explicit FitDivergedError(const std::string& msg) : std::runtime_error(msg) {}
};

// Archive / checkpoint containers.
struct ArchiveError : std::runtime_error {
  explicit ArchiveError(const std::string& msg) : std::runtime_error(msg) {}
};
struct ChecksumError : ArchiveError {
  explicit ChecksumError(const std::string& msg) : ArchiveError(msg) {}
};
struct VersionError : ArchiveError {
  explicit VersionError(const std::string& msg) : ArchiveError(msg) {}
};
struct TruncatedError : ArchiveError {
  explicit TruncatedError(const std::string& msg) : ArchiveError(msg) {}
};

// Training.
struct TrainDivergedError : std::runtime_error {
  explicit TrainDivergedError(const std::string& msg) : std::runtime_error(msg) {}
};
struct DegenerateLossError : std::invalid_argument {
  explicit DegenerateLossError(const std::string& msg) : std::invalid_argument(msg) {}
};

}  // namespace tcprof
