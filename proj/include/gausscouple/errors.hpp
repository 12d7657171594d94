#pragma once

#include <stdexcept>
#include <string>

namespace gausscouple {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// Some B_j has rank below its codomain dimension; the coupling maximum is -inf.
class NonSurjectiveMap : public Error {
 public:
  NonSurjectiveMap(int map_index, int rank, int rows)
      : Error("map " + std::to_string(map_index) + " has rank " + std::to_string(rank) +
              " < codomain dimension " + std::to_string(rows)),
        map_index(map_index) {}
  int map_index;
};

// B_j K B_j^T is numerically singular.
class SingularPushforward : public Error {
 public:
  using Error::Error;
};

class NoConvergence : public Error {
 public:
  using Error::Error;
};

// Truncating the support of a density moves its entropy by more than the allowed amount.
class UnstableTail : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace gausscouple
