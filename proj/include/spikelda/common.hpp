#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace spikelda {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Feature index sets are kept sorted ascending, 0-based.
using IndexSet = std::vector<int>;

// Error taxonomy. Every throw in the library uses one of these so callers
// (and the CLI exit-code mapping) can distinguish bad input from numerical
// failure.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input: non-symmetric matrix, non-finite entries, shape mismatch.
struct ValidationError : Error {
  using Error::Error;
};
// Parameter outside its admissible range (k, d, s, fractions).
struct RangeError : Error {
  using Error::Error;
};
// Input outside the mathematical domain of the operation (non-PD, zero matrix).
struct DomainError : Error {
  using Error::Error;
};
struct InsufficientDataError : Error {
  using Error::Error;
};
// Requested spike count incompatible with the spectrum (sigma2_hat <= 0).
struct DegenerateSpectrumError : Error {
  using Error::Error;
};
struct DegenerateAlignmentError : Error {
  using Error::Error;
};
struct EmptySelectionError : Error {
  using Error::Error;
};
struct ParseError : Error {
  using Error::Error;
};
struct SchemaError : Error {
  using Error::Error;
};
struct SplitError : Error {
  using Error::Error;
};
struct TuningError : Error {
  using Error::Error;
};
struct RunError : Error {
  using Error::Error;
};

// Default RNG seed used by the CLI when neither --seed nor SPIKELDA_SEED is
// given. Fixed so that documented command lines reproduce byte-identical
// outputs.
inline constexpr std::uint64_t kDefaultSeed = 0x5C1DA5EEDull;

}  // namespace spikelda
