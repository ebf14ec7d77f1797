#pragma once

#include <cstdarg>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace gridres {

/// Base class for all library errors.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input file (carries file/field context in the message).
class ParseError : public Error {
  public:
    using Error::Error;
};

/// Invalid run configuration (CLI exit code 2).
class ConfigError : public Error {
  public:
    using Error::Error;
};

/// Problem has no feasible solution (CLI exit code 3).
class InfeasibleError : public Error {
  public:
    using Error::Error;
};

/// printf-style formatting into a std::string.
inline std::string strf(const char* fmt, ...) {
    va_list args;
    va_start(args, fmt);
    va_list args2;
    va_copy(args2, args);
    int n = std::vsnprintf(nullptr, 0, fmt, args);
    va_end(args);
    std::string out(n > 0 ? static_cast<size_t>(n) : 0, '\0');
    if (n > 0) {
        std::vsnprintf(out.data(), out.size() + 1, fmt, args2);
    }
    va_end(args2);
    return out;
}

} // namespace gridres
