#pragma once

// Shared error types and small utilities used across the library.

#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace fekl {

// Caller broke a documented precondition (dimension mismatch, bad argument).
struct ContractViolation : std::logic_error {
  explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

// Input data describes a state the math cannot handle (coincident atoms, ...).
struct SingularConfiguration : std::runtime_error {
  explicit SingularConfiguration(const std::string& what) : std::runtime_error(what) {}
};

// An order parameter has no defined value for the given configuration.
struct UndefinedOrderParameter : std::runtime_error {
  explicit UndefinedOrderParameter(const std::string& what) : std::runtime_error(what) {}
};

// The particle population can no longer represent a distribution
// (all weights vanished, every density evaluation non-finite, ...).
struct DegeneratePopulation : std::runtime_error {
  explicit DegeneratePopulation(const std::string& what) : std::runtime_error(what) {}
};

// An annealing bridge could not be completed; carries step diagnostics.
struct BridgeFailure : std::runtime_error {
  explicit BridgeFailure(const std::string& what) : std::runtime_error(what) {}
};

// Optimization produced non-finite parameters or estimates.
struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

// Configuration file / override problem; message names the offending key.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// A checkpoint or data file did not parse or is inconsistent.
struct FileFormatError : std::runtime_error {
  explicit FileFormatError(const std::string& what) : std::runtime_error(what) {}
};

// Format a double with enough digits to round-trip exactly through text.
inline std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// FNV-1a over a byte string; used to stamp output files with a config digest.
inline std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace fekl
