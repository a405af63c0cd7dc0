#pragma once

#include <stdexcept>
#include <string>

namespace cgc {

struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InfeasibleError : std::runtime_error {
    InfeasibleError(const std::string& msg, std::string bound)
        : std::runtime_error(msg), binding(std::move(bound)) {}
    std::string binding;
};

struct NonConvergenceError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct UnsupportedError : std::logic_error {
    using std::logic_error::logic_error;
};

}  // namespace cgc
