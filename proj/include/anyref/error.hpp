#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace anyref {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class OutOfBoundsError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class UndefinedIouError : public Error {
public:
    using Error::Error;
};

class InvalidPolygonError : public Error {
public:
    using Error::Error;
};

class TilingError : public Error {
public:
    using Error::Error;
};

class DegenerateRegionError : public Error {
public:
    using Error::Error;
};

class TemplateError : public Error {
public:
    using Error::Error;
};

class EmptyAnnotationError : public Error {
public:
    using Error::Error;
};

class PairingError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

/// Input-record error carrying the 1-based line number of the offending line.
class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& what)
        : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

}  // namespace anyref
