#pragma once

#include <stdexcept>
#include <string>

namespace potcast {

// Base class for all potcast errors.
class error : public std::runtime_error {
 public:
  explicit error(const std::string& what) : std::runtime_error(what) {}
};

// Violated precondition / invalid argument (CLI exit code 2).
class domain_error : public error {
 public:
  explicit domain_error(const std::string& what) : error(what) {}
};

// Unusable input data: unreadable files, non-finite samples, degenerate
// datasets (CLI exit code 3).
class input_error : public error {
 public:
  explicit input_error(const std::string& what) : error(what) {}
};

// Numerical failure: optimizer breakdown, chain degeneracy, quadrature
// tolerance not met, underflow (CLI exit code 4).
class numerical_error : public error {
 public:
  explicit numerical_error(const std::string& what) : error(what) {}
};

}  // namespace potcast
