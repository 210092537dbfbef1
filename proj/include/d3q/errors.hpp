#pragma once

#include <stdexcept>
#include <string>

namespace d3q {

// Every failure surfaced by the library derives from Error so callers can
// catch the family or a specific kind.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SchemaViolation : Error { using Error::Error; };
struct ShapeError : Error { using Error::Error; };
struct NumericsError : Error { using Error::Error; };
struct EmptyBuffer : Error { using Error::Error; };
struct BatchError : Error { using Error::Error; };
struct SessionClosed : Error { using Error::Error; };
struct NotFound : Error { using Error::Error; };
struct NoAgents : Error { using Error::Error; };
struct FormatError : Error { using Error::Error; };

}  // namespace d3q
