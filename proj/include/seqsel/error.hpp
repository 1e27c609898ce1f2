#pragma once

#include <stdexcept>
#include <string>

namespace seqsel {

/// Base class for every error raised by the library.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input: ragged rows, bad headers, unparsable cells.
class FormatError : public Error
{
public:
    using Error::Error;
};

/// Well-formed input that violates a contract (unknown labels, bad ranges, ...).
class ValidationError : public Error
{
public:
    using Error::Error;
};

/// Overflow or breakdown inside a numerical routine.
class NumericalError : public Error
{
public:
    using Error::Error;
};

} // namespace seqsel
