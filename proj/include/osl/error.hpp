// osl: obstacle soliton laboratory
// Copyright (c) 2026 the osl developers

#pragma once

#include <stdexcept>
#include <string>

namespace osl {

/// Raised when an operation is called outside its domain (bad config, bad
/// grid, wrong frequency).  The CLI maps it to exit code 2.
class PreconditionError : public std::invalid_argument {
public:
  explicit PreconditionError(const std::string &what) : std::invalid_argument(what) {}
};

/// Raised when a numerical procedure fails to converge or detects a
/// pathological state.  The CLI maps it to exit code 3.
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string &what) : std::runtime_error(what) {}
};

} // namespace osl
