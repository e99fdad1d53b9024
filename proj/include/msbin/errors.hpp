#pragma once

#include <stdexcept>
#include <string>

namespace msbin {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing file, unreadable raster, malformed manifest, size mismatch.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// A metric whose denominator vanishes for the given input (e.g. GT without ink).
class MetricUndefined : public Error {
 public:
  using Error::Error;
};

class KernelError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace msbin
