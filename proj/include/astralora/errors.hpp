#ifndef ASTRALORA_ERRORS_HPP
#define ASTRALORA_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace astralora {

// Configuration problems (bad file, missing/unknown keys, invalid values).
// The CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// I/O and file-format problems (checkpoint corruption, unwritable paths).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

// Oracle query budget exhausted mid-operation.
class BudgetError : public std::runtime_error {
public:
    explicit BudgetError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training aborted (non-finite loss); message carries the diagnostic dump.
class TrainAbort : public std::runtime_error {
public:
    explicit TrainAbort(const std::string& msg) : std::runtime_error(msg) {}
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw std::invalid_argument(what);
}

} // namespace astralora

#endif
