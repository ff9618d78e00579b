#pragma once

#include <stdexcept>
#include <string>

namespace styleval {

// Failure classes. The CLI maps kinds to exit codes: config -> 2,
// data -> 3, backend -> 4.
enum class Errc {
  bad_config,
  unsupported,
  malformed_line,
  duplicate_id,
  inconsistent_group,
  io_error,
  decode_error,
  dimension_mismatch,
  empty_caption,
  insufficient_labels,
  no_positive_pair,
  non_finite_loss,
  cache_corrupt,
  checkpoint_corrupt,
  label_missing_in_keys,
  empty_group,
  missing_output,
  backend_unavailable,
};

enum class ErrorKind { config, data, backend };

class Error : public std::runtime_error {
 public:
  Error(Errc code, std::string message)
      : std::runtime_error(std::move(message)), code_(code) {}

  Errc code() const noexcept { return code_; }

  ErrorKind kind() const noexcept {
    switch (code_) {
      case Errc::bad_config:
      case Errc::unsupported:
        return ErrorKind::config;
      case Errc::backend_unavailable:
        return ErrorKind::backend;
      default:
        return ErrorKind::data;
    }
  }

  int exit_code() const noexcept {
    switch (kind()) {
      case ErrorKind::config:
        return 2;
      case ErrorKind::data:
        return 3;
      case ErrorKind::backend:
        return 4;
    }
    return 3;
  }

  const char* code_name() const noexcept;

 private:
  Errc code_;
};

}  // namespace styleval
