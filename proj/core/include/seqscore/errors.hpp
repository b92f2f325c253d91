#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace seqscore {

/// Information matrix could not be factored even after the ridge guard.
class SingularInformation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A record in an observation stream or event log failed validation.
/// `position` is the 1-based line number for files, or the 0-based
/// observation index for in-memory streams.
class MalformedRecord : public std::runtime_error {
 public:
  MalformedRecord(std::size_t position, const std::string& what)
      : std::runtime_error("record " + std::to_string(position) + ": " + what),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Invalid experiment, monitor or session configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A persisted session blob could not be restored (bad header, version,
/// checksum or configuration hash).
class StateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace seqscore
