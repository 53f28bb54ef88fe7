#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace racerl {

// Config file problems: unknown keys, bad values, violated invariants.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem problems: unwritable output directories, missing files.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Malformed serialized data. offset() is the byte position of the problem.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, size_t offset)
      : std::runtime_error(what + " (offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  size_t offset() const { return offset_; }

 private:
  size_t offset_;
};

class VersionError : public FormatError {
 public:
  VersionError(const std::string& what, size_t offset) : FormatError(what, offset) {}
};

}  // namespace racerl
