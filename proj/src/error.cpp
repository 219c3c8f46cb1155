#include "ssreid/error.hpp"

namespace ssreid {

const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::parse: return "parse error";
    case ErrorKind::shape: return "shape error";
    case ErrorKind::format: return "format error";
    case ErrorKind::io: return "I/O error";
    case ErrorKind::domain: return "domain error";
    case ErrorKind::parameter: return "parameter error";
    case ErrorKind::config: return "config error";
    case ErrorKind::invariant: return "invariant error";
    case ErrorKind::degenerate: return "degenerate data";
    case ErrorKind::conditioning: return "conditioning error";
    case ErrorKind::rank: return "rank error";
    }
    return "error";
}

int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::config:
    case ErrorKind::domain:
    case ErrorKind::parameter:
        return 1;
    case ErrorKind::parse:
    case ErrorKind::shape:
    case ErrorKind::format:
    case ErrorKind::io:
        return 2;
    case ErrorKind::invariant:
    case ErrorKind::degenerate:
    case ErrorKind::conditioning:
    case ErrorKind::rank:
        return 3;
    }
    return 3;
}

}  // namespace ssreid
