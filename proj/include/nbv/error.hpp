#pragma once

#include <stdexcept>
#include <string>

namespace nbv {

// Base class for every error raised by the planning core. The C API maps the
// concrete subclasses onto status codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A caller passed a value that violates an operation's precondition.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Visibility was requested from a seed that sits inside occupied geometry.
class DegenerateSeed : public Error {
 public:
  using Error::Error;
};

// Scene generation or rendering could not satisfy its request.
class SceneError : public Error {
 public:
  using Error::Error;
};

// A persisted mask cache is corrupt, truncated, or from another format version.
class CacheFormatError : public Error {
 public:
  using Error::Error;
};

// A file could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

// A configuration document failed schema validation.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace nbv
