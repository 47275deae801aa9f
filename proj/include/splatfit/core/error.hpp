#pragma once

#include <stdexcept>
#include <string>

namespace splatfit {

// Base class for all library errors. Subclasses name the contract that was
// violated; the message carries the diagnostic.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class ShapeMismatch : public Error {
public:
    using Error::Error;
};

class NonPositiveDepth : public Error {
public:
    using Error::Error;
};

class StateMismatch : public Error {
public:
    using Error::Error;
};

class OutOfRange : public Error {
public:
    using Error::Error;
};

class EmptySet : public Error {
public:
    using Error::Error;
};

class EmptyCloud : public Error {
public:
    using Error::Error;
};

class FrameCountMismatch : public Error {
public:
    using Error::Error;
};

class MissingAgent : public Error {
public:
    using Error::Error;
};

class NonFiniteGradient : public Error {
public:
    using Error::Error;
};

class NonFiniteLoss : public Error {
public:
    using Error::Error;
};

class ParseError : public Error {
public:
    using Error::Error;
};

class MissingFile : public Error {
public:
    using Error::Error;
};

class MissingCheckpoint : public Error {
public:
    using Error::Error;
};

}  // namespace splatfit
