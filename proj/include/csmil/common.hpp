#pragma once

#include <stdexcept>
#include <string>

namespace csmil {

// Exit codes used by the CLI: 0 ok, 2 config error, 3 data error, 4 numerical failure.
struct Error : std::runtime_error {
    int exit_code;
    Error(int code, const std::string& msg) : std::runtime_error(msg), exit_code(code) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(2, msg) {}
};

struct DataError : Error {
    explicit DataError(const std::string& msg) : Error(3, msg) {}
};

struct NumericError : Error {
    explicit NumericError(const std::string& msg) : Error(4, msg) {}
};

} // namespace csmil
