#pragma once

#include <stdexcept>
#include <string>

namespace mhpp {

/// Base for every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Operand shapes or dimensions disagree.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// Argument outside its documented domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A file does not follow its documented format.
class FormatError : public Error {
public:
    using Error::Error;
};

/// A numerical procedure produced non-finite values or a singular system.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// A CLI step was invoked before the artifact it consumes exists.
class DependencyError : public Error {
public:
    DependencyError(const std::string& artifact, const std::string& producer)
        : Error("missing prerequisite artifact '" + artifact + "' (run '" + producer + "' first)"),
          artifact_(artifact) {}
    const std::string& artifact() const noexcept { return artifact_; }

private:
    std::string artifact_;
};

}  // namespace mhpp
