#pragma once

#include <stdexcept>
#include <string>

namespace confdetect {

enum class ErrorKind {
    InvalidArgument,   // caller violated a precondition
    Data,              // malformed or inconsistent input data
    Io,                // filesystem failure
    VersionMismatch,   // serialized payload from an unsupported version
    CorruptPayload,    // serialized payload cannot be decoded
    Insufficient,      // not enough samples to satisfy a request
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace confdetect
