#pragma once

#include <stdexcept>
#include <string>

namespace stylever {

// Raised for malformed inputs and numeric failures. The CLI maps these to
// exit status 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class WavFormatError : public Error {
 public:
  using Error::Error;
};

// A frame whose autocorrelation cannot support an LPC solve. Callers of the
// per-frame routines are expected to skip it.
class DegenerateFrame : public Error {
 public:
  DegenerateFrame() : Error("degenerate frame") {}
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace stylever
