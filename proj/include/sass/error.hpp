#pragma once

#include <stdexcept>
#include <string>

namespace sass {

// Error taxonomy shared by all modules. Each maps to a distinct failure
// class so callers (and the CLI) can react without parsing messages.

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct UsageError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct FitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct TopologyError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IntegrityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AuthError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConflictError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotFoundError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ValidationError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace sass
