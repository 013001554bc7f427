#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace suget {

// All library failures throw Error. `code` is a stable machine-checkable
// identifier (e.g. "UnbalancedParens", "NotAncestor"); `what()` adds context.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

    const std::string& code() const { return code_; }

private:
    std::string code_;
};

[[noreturn]] inline void fail(std::string code, const std::string& message) {
    throw Error(std::move(code), message);
}

}  // namespace suget
