#pragma once

#include <stdexcept>
#include <string>

namespace kgqa {

// Every error raised by the library derives from Error. The CLI maps the
// category to a process exit code.
enum class ErrorKind {
    Parse,
    Validation,
    Lookup,
    Argument,
    Format,
    Config,
    Numeric,
    Training,
    Generation,
    Placement,
    Mode,
    Io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message);
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class ParseError : public Error {
public:
    ParseError(std::size_t line, const std::string& message);
    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

#define KGQA_DEFINE_ERROR(Name, Kind)                                        \
    class Name : public Error {                                              \
    public:                                                                  \
        explicit Name(const std::string& message) : Error(ErrorKind::Kind, message) {} \
    };

KGQA_DEFINE_ERROR(ValidationError, Validation)
KGQA_DEFINE_ERROR(LookupError, Lookup)
KGQA_DEFINE_ERROR(ArgumentError, Argument)
KGQA_DEFINE_ERROR(FormatError, Format)
KGQA_DEFINE_ERROR(ConfigError, Config)
KGQA_DEFINE_ERROR(NumericError, Numeric)
KGQA_DEFINE_ERROR(TrainingError, Training)
KGQA_DEFINE_ERROR(GenerationError, Generation)
KGQA_DEFINE_ERROR(PlacementError, Placement)
KGQA_DEFINE_ERROR(ModeError, Mode)
KGQA_DEFINE_ERROR(IoError, Io)

#undef KGQA_DEFINE_ERROR

}  // namespace kgqa
