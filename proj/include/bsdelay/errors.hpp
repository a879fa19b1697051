#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace bsdelay {

/// Error categories; the CLI maps these to process exit codes.
enum class ErrorCategory : int {
    Config = 2,
    NonConvergence = 3,
    Domain = 4,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCategory cat, const std::string& msg)
        : std::runtime_error(msg), cat_(cat) {}
    ErrorCategory category() const { return cat_; }

private:
    ErrorCategory cat_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(ErrorCategory::Config, msg) {}
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& msg) : Error(ErrorCategory::Domain, msg) {}
};

/// Carries the iterate-difference history of a failed Picard solve.
class NonConvergenceError : public Error {
public:
    NonConvergenceError(const std::string& msg, std::vector<double> diffs)
        : Error(ErrorCategory::NonConvergence, msg), diffs_(std::move(diffs)) {}
    const std::vector<double>& diff_history() const { return diffs_; }

private:
    std::vector<double> diffs_;
};

}  // namespace bsdelay
