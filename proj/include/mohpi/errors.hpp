#pragma once

#include <stdexcept>
#include <string>

namespace mohpi {

// Base of every error raised by the library. The CLI maps these to exit
// code 1, except IoError which maps to 2.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public Error {
public:
    using Error::Error;
};

class InvalidArgumentError : public Error {
public:
    using Error::Error;
};

// configspace
class SchemaError : public Error {
public:
    using Error::Error;
};
class DomainError : public Error {
public:
    using Error::Error;
};
class ConditionError : public Error {
public:
    using Error::Error;
};
class InactiveValueError : public Error {
public:
    using Error::Error;
};
class OutOfDomainError : public Error {
public:
    using Error::Error;
};
class OutOfRangeError : public Error {
public:
    using Error::Error;
};

// dataset
class MissingColumnError : public Error {
public:
    using Error::Error;
};
class ParseError : public Error {
public:
    using Error::Error;
};
class NonFiniteObjectiveError : public Error {
public:
    using Error::Error;
};
class EmptyDatasetError : public Error {
public:
    using Error::Error;
};

// forest / fanova
class ShapeMismatchError : public Error {
public:
    using Error::Error;
};
class DegenerateTargetError : public Error {
public:
    using Error::Error;
};

// synthetic
class UnsupportedBasisError : public Error {
public:
    using Error::Error;
};
class EmptyGroupError : public Error {
public:
    using Error::Error;
};

} // namespace mohpi
