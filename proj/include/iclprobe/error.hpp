#pragma once

#include <stdexcept>
#include <string>

namespace iclprobe {

/// Base of every error raised by the library. `category()` is a short
/// machine-readable tag surfaced by the CLI.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& message) : std::runtime_error(message) {}
    virtual const char* category() const noexcept { return "runtime"; }
};

/// Malformed or inconsistent user input: data files, configs, arguments.
class InputError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "input"; }
};

/// A precondition of a sampling or generation routine does not hold.
class PreconditionError : public Error {
public:
    using Error::Error;
    const char* category() const noexcept override { return "precondition"; }
};

class GatewayError : public Error {
public:
    enum class Kind { network, authentication, context_length, protocol };

    GatewayError(Kind kind, const std::string& message) : Error(message), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

    const char* category() const noexcept override {
        switch (kind_) {
        case Kind::network: return "network";
        case Kind::authentication: return "authentication";
        case Kind::context_length: return "context_length";
        case Kind::protocol: return "protocol";
        }
        return "gateway";
    }

private:
    Kind kind_;
};

}  // namespace iclprobe
