#pragma once

#include <stdexcept>
#include <string>

namespace rebarscan {

/// Raised when a caller violates an operation's precondition.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised on PNG / filesystem failures.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A segmentation backend failed to answer a request.
class BackendError : public std::runtime_error {
 public:
  BackendError(std::string request_id, const std::string& message)
      : std::runtime_error("backend error [" + request_id + "]: " + message),
        request_id_(std::move(request_id)) {}

  const std::string& request_id() const noexcept { return request_id_; }

 private:
  std::string request_id_;
};

}  // namespace rebarscan
