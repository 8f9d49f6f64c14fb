#pragma once

#include <stdexcept>
#include <string>

namespace dmab {

/// A model or parameter fails a documented precondition.
class InvalidModelError : public std::invalid_argument {
public:
    explicit InvalidModelError(const std::string& what) : std::invalid_argument(what) {}
};

/// A regret bound is evaluated outside its domain (zero gap, precision at
/// or past the pole, kappa below its floor).
class UndefinedBoundError : public std::domain_error {
public:
    explicit UndefinedBoundError(const std::string& what) : std::domain_error(what) {}
};

/// An internal invariant broke; indicates a bug, not bad input.
class ProtocolError : public std::logic_error {
public:
    explicit ProtocolError(const std::string& what) : std::logic_error(what) {}
};

}  // namespace dmab
