#pragma once

#include <stdexcept>
#include <string>

namespace arbreach {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid arguments or configuration (bad parameters, violated preconditions).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// Malformed or unusable input data (files, price rows, datasets).
class DataError : public Error {
public:
    using Error::Error;
};

namespace detail {

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ValidationError(what);
}

} // namespace detail
} // namespace arbreach
