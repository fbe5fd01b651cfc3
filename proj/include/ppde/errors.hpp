#pragma once

#include <stdexcept>
#include <string>

namespace ppde {

// Invalid or inconsistent user-facing configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Tree evaluation would exceed the child-evaluation budget (CLI exit code 3).
struct BudgetError : std::runtime_error {
    explicit BudgetError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ppde
