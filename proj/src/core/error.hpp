// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace kenforge {

// Error categories. The numeric values double as C API status codes and
// CLI exit codes: 1 internal, 2 input/validation, 3 evaluator, 4 I/O.
enum class ErrorKind : int {
    internal = 1,
    input = 2,
    evaluator = 3,
    io = 4,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string message)
        : std::runtime_error(std::move(message)), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }
    int code() const noexcept { return static_cast<int>(kind_); }

private:
    ErrorKind kind_;
};

namespace detail {
template <typename... Parts>
std::string msg(Parts&&... parts) {
    std::ostringstream os;
    (os << ... << std::forward<Parts>(parts));
    return os.str();
}
}  // namespace detail

template <typename... Parts>
[[noreturn]] void fail_input(Parts&&... parts) {
    throw Error(ErrorKind::input, detail::msg(std::forward<Parts>(parts)...));
}

template <typename... Parts>
[[noreturn]] void fail_io(Parts&&... parts) {
    throw Error(ErrorKind::io, detail::msg(std::forward<Parts>(parts)...));
}

template <typename... Parts>
[[noreturn]] void fail_evaluator(Parts&&... parts) {
    throw Error(ErrorKind::evaluator, detail::msg(std::forward<Parts>(parts)...));
}

template <typename... Parts>
[[noreturn]] void fail_internal(Parts&&... parts) {
    throw Error(ErrorKind::internal, detail::msg(std::forward<Parts>(parts)...));
}

}  // namespace kenforge
