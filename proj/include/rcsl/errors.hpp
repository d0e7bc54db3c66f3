#pragma once

#include <stdexcept>
#include <string>

namespace rcsl {

/// Base class for every domain failure raised by the library. Invalid
/// arguments use std::invalid_argument instead.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// The (state, rtg) outcome tree grew past the configured node cap.
class EnumerationInfeasible : public Error {
public:
  using Error::Error;
};

/// A training loss became NaN or infinite.
class TrainingDiverged : public Error {
public:
  using Error::Error;
};

/// A tabular model was queried off its data support.
class UnmodeledState : public Error {
public:
  using Error::Error;
};

/// A mixture policy found no stored prefix ending in the queried state.
class NoGeneralizationTarget : public Error {
public:
  using Error::Error;
};

/// Model rollouts never beat the best offline return.
class NoImprovementDiscoverable : public Error {
public:
  using Error::Error;
};

}  // namespace rcsl
