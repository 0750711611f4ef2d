#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace pmtv {

inline constexpr const char* kVersion = "0.1.0";

// Inner solver failed to reach its target within the iteration cap.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

// Invalid configuration; collects every offending field.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> fields)
      : std::runtime_error(join(fields)), fields_(std::move(fields)) {}
  const std::vector<std::string>& fields() const { return fields_; }

 private:
  static std::string join(const std::vector<std::string>& fields) {
    std::string msg = "invalid configuration:";
    for (const auto& f : fields) {
      msg += " [" + f + "]";
    }
    return msg;
  }
  std::vector<std::string> fields_;
};

// A bracket or structural precondition that must hold by construction failed.
class StructuralError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pmtv
