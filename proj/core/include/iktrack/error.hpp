#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace iktrack {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// so3

class NotSkewSymmetric : public Error {
public:
    using Error::Error;
};

class InvalidRotation : public Error {
public:
    using Error::Error;
};

class SingularMatrix : public Error {
public:
    using Error::Error;
};

class DegenerateMatrix : public Error {
public:
    using Error::Error;
};

// kinematics model

class UnknownFrame : public Error {
public:
    explicit UnknownFrame(const std::string& frame)
        : Error("unknown frame '" + frame + "'"), frame_(frame) {}
    const std::string& frame() const noexcept { return frame_; }

private:
    std::string frame_;
};

/// Malformed document; `position()` is a byte offset (model files) or a
/// 1-based line number (stream files), see `unit()`.
class ParseError : public Error {
public:
    enum class Unit { Byte, Line };

    ParseError(const std::string& what, std::size_t position, Unit unit)
        : Error(what), position_(position), unit_(unit) {}
    std::size_t position() const noexcept { return position_; }
    Unit unit() const noexcept { return unit_; }

private:
    std::size_t position_;
    Unit unit_;
};

/// A structurally well-formed document that breaks a named model rule.
class ValidationError : public Error {
public:
    ValidationError(std::string rule, const std::string& detail)
        : Error(rule + ": " + detail), rule_(std::move(rule)) {}
    const std::string& rule() const noexcept { return rule_; }

private:
    std::string rule_;
};

// qp

class RankDeficient : public Error {
public:
    using Error::Error;
};

// dynamical ik

class StaleSample : public Error {
public:
    using Error::Error;
};

class InvalidGains : public Error {
public:
    using Error::Error;
};

/// The inner QP did not return a usable solution.
class SolverFailure : public Error {
public:
    using Error::Error;
};

// instantaneous ik

class DecompositionError : public Error {
public:
    using Error::Error;
};

// harness

class SchemaMismatch : public Error {
public:
    using Error::Error;
};

class SpecInfeasible : public Error {
public:
    using Error::Error;
};

}  // namespace iktrack
