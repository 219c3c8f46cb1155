#pragma once

#include <stdexcept>
#include <string>

namespace ssreid {

enum class ErrorKind {
    parse,
    shape,
    format,
    io,
    domain,
    parameter,
    config,
    invariant,
    degenerate,
    conditioning,
    rank,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

const char* to_string(ErrorKind kind);

// Process exit status for an error: 1 config, 2 data, 3 numerical.
int exit_code(ErrorKind kind);

}  // namespace ssreid
