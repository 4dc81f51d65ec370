#pragma once

#include <stdexcept>
#include <string>

namespace privsvm {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// --- usage / argument errors ---

class InvalidArgument : public Error {
public:
    using Error::Error;
};

// --- data errors ---

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class SingleClassData : public Error {
public:
    using Error::Error;
};

class UnknownIdentity : public Error {
public:
    using Error::Error;
};

class EmptyImage : public Error {
public:
    using Error::Error;
};

class EmptyQuerySet : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class VersionMismatch : public Error {
public:
    using Error::Error;
};

class KindMismatch : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

// --- numerical failures ---

class DegenerateMatrix : public Error {
public:
    using Error::Error;
};

class NonConvergence : public Error {
public:
    using Error::Error;
};

}  // namespace privsvm
