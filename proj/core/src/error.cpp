#include "kgqa/error.hpp"

namespace kgqa {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::Parse: return "parse error";
        case ErrorKind::Validation: return "validation error";
        case ErrorKind::Lookup: return "lookup error";
        case ErrorKind::Argument: return "argument error";
        case ErrorKind::Format: return "format error";
        case ErrorKind::Config: return "configuration error";
        case ErrorKind::Numeric: return "numeric error";
        case ErrorKind::Training: return "training error";
        case ErrorKind::Generation: return "generation error";
        case ErrorKind::Placement: return "placement error";
        case ErrorKind::Mode: return "mode error";
        case ErrorKind::Io: return "i/o error";
    }
    return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

ParseError::ParseError(std::size_t line, const std::string& message)
    : Error(ErrorKind::Parse, "line " + std::to_string(line) + ": " + message), line_(line) {}

}  // namespace kgqa
