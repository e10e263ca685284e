#pragma once

#include <stdexcept>
#include <string>

namespace bdnet {

// Error categories; mirrored one-to-one by the bd_status codes in bdnet.h.
enum class Status {
  ok = 0,
  invalid_argument = 1,
  shape_mismatch = 2,
  numeric = 3,
  format = 4,
  corrupt = 5,
  io = 6,
  config = 7,
  evaluation = 8,
  not_found = 9,
};

class Error : public std::runtime_error {
 public:
  Error(Status status, const std::string& message)
      : std::runtime_error(message), status_(status) {}

  Status status() const noexcept { return status_; }

 private:
  Status status_;
};

[[noreturn]] inline void fail(Status status, const std::string& message) {
  throw Error(status, message);
}

}  // namespace bdnet
