#pragma once

#include <stdexcept>
#include <string>

namespace cslam {

/// Invalid or unreadable configuration. `key()` names the offending entry.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, const std::string& what)
      : std::runtime_error(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

/// Link-state query past the end (or before the start) of a recorded trace.
class TraceExhausted : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Pose graph is not a single connected component.
class DisconnectedGraph : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Levenberg-Marquardt could not reduce the cost.
class SolverDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cslam
