#pragma once

#include <stdexcept>
#include <string>

namespace lcrr {

// Unreadable or malformed external input (files, JSON layouts).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input is well-formed but violates a domain constraint.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Broken internal invariant, e.g. a template missing a placeholder.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-retryable failure reported by a generation backend.
class BackendError : public std::runtime_error {
 public:
  BackendError(int status, std::string body)
      : std::runtime_error("backend returned HTTP " + std::to_string(status) +
                           ": " + body),
        status_(status),
        body_(std::move(body)) {}

  int status() const noexcept { return status_; }
  const std::string& body() const noexcept { return body_; }

 private:
  int status_;
  std::string body_;
};

// Retries against a backend were exhausted.
class TimeoutError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lcrr
