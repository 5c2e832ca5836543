#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace formsim {

/// Base of every error raised by the library. The CLI maps these to exit
/// code 2, except contract violations, which are usage errors (1).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller broke an operation's precondition (bad sizes, empty input, ...).
class ContractViolation : public Error {
public:
    using Error::Error;
};

/// Malformed input text. Carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t line)
        : Error(line ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

/// Input is well-formed but does not follow the documented schema.
class SchemaError : public Error {
public:
    using Error::Error;
};

/// Data is internally inconsistent (non-monotonic time, roster drift, ...).
class IntegrityError : public Error {
public:
    using Error::Error;
};

/// Schema violation attributable to one named field of a record.
class FieldError : public SchemaError {
public:
    FieldError(std::string field, const std::string& what)
        : SchemaError("field '" + field + "': " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

/// A name (scheme, segment, match) that is not known.
class LookupError : public Error {
public:
    using Error::Error;
};

}  // namespace formsim
