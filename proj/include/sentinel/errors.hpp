#pragma once

#include <stdexcept>
#include <string>

namespace sentinel {

// Exit codes shared between the library and the CLI front-end.
enum class ExitCode : int {
    ok = 0,
    config = 2,
    data = 3,
    divergence = 4,
    transport = 5,
};

class Error : public std::runtime_error {
public:
    Error(ExitCode code, const std::string& msg)
        : std::runtime_error(msg), code_(code) {}

    ExitCode code() const { return code_; }
    int exit_code() const { return static_cast<int>(code_); }

private:
    ExitCode code_;
};

// Invalid or inconsistent configuration, caught before any work starts.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(ExitCode::config, msg) {}
};

// Malformed or contract-violating input data.
class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(ExitCode::data, msg) {}
};

// A persisted cache does not match the current run configuration.
class CacheInvalidError : public DataError {
public:
    explicit CacheInvalidError(const std::string& msg) : DataError(msg) {}
};

// Non-finite numbers encountered during optimization.
class DivergenceError : public Error {
public:
    explicit DivergenceError(const std::string& msg) : Error(ExitCode::divergence, msg) {}
};

// Remote provider could not be reached or violated its contract.
class TransportError : public Error {
public:
    explicit TransportError(const std::string& msg) : Error(ExitCode::transport, msg) {}
};

} // namespace sentinel
