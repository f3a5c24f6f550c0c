#pragma once

#include <stdexcept>
#include <string>

namespace engel {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Expression text could not be parsed. Carries 1-based line/column and the
/// token set that would have been accepted at that position.
class SyntaxError : public Error {
public:
    SyntaxError(const std::string& msg, int line, int column, std::string expected)
        : Error(msg), line(line), column(column), expected(std::move(expected)) {}
    int line;
    int column;
    std::string expected;
};

/// Identifier is neither a known variable nor a known function.
class UnknownIdentifier : public Error {
public:
    using Error::Error;
};

/// Point lies outside the chart domain (non-periodic axis out of range).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Evaluation produced a non-finite value, or an iteration failed to converge.
class NumericalError : public Error {
public:
    using Error::Error;
};

class NotImmersed : public Error {
public:
    using Error::Error;
};

class NotImmersedAtCutPoint : public Error {
public:
    using Error::Error;
};

class ResolutionTooCoarse : public Error {
public:
    using Error::Error;
};

class LoopDoesNotFit : public Error {
public:
    using Error::Error;
};

class NonStandardWiggle : public Error {
public:
    using Error::Error;
};

/// Internal failure: an intermediate curve of a homotopy lost convexity.
class ConvexityLost : public Error {
public:
    using Error::Error;
};

class HypothesisViolated : public Error {
public:
    using Error::Error;
};

class Overcrowded : public Error {
public:
    using Error::Error;
};

class NotConvex : public Error {
public:
    using Error::Error;
};

class DegenerateFrame : public Error {
public:
    using Error::Error;
};

class KernelRankError : public Error {
public:
    using Error::Error;
};

class NestingViolation : public Error {
public:
    using Error::Error;
};

class TangencyDetected : public Error {
public:
    using Error::Error;
};

/// Flow left the chart through a non-periodic face.
class FlowEscape : public Error {
public:
    using Error::Error;
};

/// The plane field touches the flow direction; the development is undefined.
class TangencyToY : public Error {
public:
    using Error::Error;
};

class SectionNotTransverse : public Error {
public:
    using Error::Error;
};

} // namespace engel
