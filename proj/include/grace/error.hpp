#ifndef GRACE_ERROR_HPP
#define GRACE_ERROR_HPP

#include <stdexcept>
#include <string>

namespace grace {

/// Malformed input: bad shapes, out-of-range ids, unparsable files.
class InputError : public std::runtime_error {
public:
    explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// A hyperparameter outside its legal range.
class ParameterError : public std::runtime_error {
public:
    explicit ParameterError(const std::string& what) : std::runtime_error(what) {}
};

/// NaN/Inf, divergence or a singular system.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// An operation called in the wrong phase (e.g. co-training before a target distribution exists).
class StateError : public std::logic_error {
public:
    explicit StateError(const std::string& what) : std::logic_error(what) {}
};

namespace detail {

inline void require_shape(bool ok, const char* where, const std::string& detail = {}) {
    if (!ok) {
        throw InputError(std::string(where) + ": shape mismatch" + (detail.empty() ? "" : " (" + detail + ")"));
    }
}

}  // namespace detail
}  // namespace grace

#endif  // GRACE_ERROR_HPP
