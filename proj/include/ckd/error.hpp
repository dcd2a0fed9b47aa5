#pragma once

#include <stdexcept>
#include <string>

namespace ckd {

// Base of every error raised by the library. Subclasses name the failing stage
// so the CLI can map them onto exit codes and messages.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ShapeError : public Error { using Error::Error; };
class IoError : public Error { using Error::Error; };
class SchemaError : public Error { using Error::Error; };
class ParseError : public Error { using Error::Error; };
class ImputationError : public Error { using Error::Error; };
class SplitError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class InputError : public Error { using Error::Error; };
class FormatError : public Error { using Error::Error; };

} // namespace ckd
