#pragma once

#include <stdexcept>
#include <string>

namespace mfa {

/// Shapes, ranks or mode indices that do not fit together.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// NaN or infinity where finite values are required.
class NonFiniteError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// A configuration or file that parsed but holds an unusable value.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Reading or writing a file failed.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Gradient-based learner blew up; the message suggests a smaller step.
class DivergenceError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input for which the requested quantity is undefined (e.g. a zero tensor).
class DegenerateInputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

}  // namespace mfa
