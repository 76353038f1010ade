#pragma once

#include <stdexcept>
#include <string>

namespace camoseg {

// Error taxonomy used across the library. The CLI maps InvalidInputError and
// ConfigError to exit code 1 (user error) and everything else to 2.
struct InvalidInputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ContractError : std::logic_error {
    using std::logic_error::logic_error;
};

inline void check_contract(bool ok, const std::string& msg) {
    if (!ok) throw ContractError(msg);
}

inline void check_input(bool ok, const std::string& msg) {
    if (!ok) throw InvalidInputError(msg);
}

}  // namespace camoseg
