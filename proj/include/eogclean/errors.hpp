#pragma once

#include <stdexcept>
#include <string>

namespace eogclean {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class RangeError : public Error { using Error::Error; };
class ArgumentError : public Error { using Error::Error; };
class SchemaError : public Error { using Error::Error; };
class DegeneracyError : public Error { using Error::Error; };
class NoEventsError : public Error { using Error::Error; };
class StructureError : public Error { using Error::Error; };
class EmptyDataError : public Error { using Error::Error; };
class UndefinedCorrelationError : public Error { using Error::Error; };
class InternalError : public Error { using Error::Error; };

// File format errors
class FormatError : public Error { using Error::Error; };
class TruncationError : public Error { using Error::Error; };
class VersionError : public Error { using Error::Error; };

}  // namespace eogclean
