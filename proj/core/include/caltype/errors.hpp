#pragma once

#include <stdexcept>
#include <string>

namespace caltype {

/// Shape or precondition violations (bad dimensions, bad parameters).
class ValidationError : public std::runtime_error {
public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

class ShapeError : public ValidationError {
public:
  explicit ShapeError(const std::string& what) : ValidationError(what) {}
};

/// File format and filesystem failures.
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace caltype
