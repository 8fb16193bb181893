#pragma once

#include <stdexcept>
#include <string>

namespace lotscale {

// Error taxonomy mirrored by the CLI exit codes:
//   2  configuration problems (parse errors, invariant violations, bad arguments)
//   3  missing inputs (required sweeps/artifacts absent)
//   4  numerical failures (singular systems, all-diverged populations)
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class MissingInputError : public std::runtime_error {
 public:
  explicit MissingInputError(const std::string& what) : std::runtime_error(what) {}
};

class NumericalError : public std::runtime_error {
 public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace lotscale
