#pragma once

#include <stdexcept>
#include <string>

namespace tailica {

/// Bad input data: unreadable files, malformed rows, violated preconditions on
/// panels or samples.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A computation that cannot be completed in floating point (singular
/// matrices, failed decompositions).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace tailica
