#pragma once

#include <stdexcept>
#include <string>

namespace delay_heat {

/// Precondition violated by a caller-supplied value.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The flow series would need more terms than FlowParams::max_terms allows.
class TruncationExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A regularity fit had nothing to fit.
class UndefinedEstimate : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Valid inputs that a particular routine does not handle (e.g. nonzero history
/// where a formula is only stated for zero history).
class UnsupportedConfiguration : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require(bool ok, const char* msg) {
    if (!ok) {
        throw InvalidArgument(msg);
    }
}

inline void require(bool ok, const std::string& msg) {
    if (!ok) {
        throw InvalidArgument(msg);
    }
}

}  // namespace detail
}  // namespace delay_heat
