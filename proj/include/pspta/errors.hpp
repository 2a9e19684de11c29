#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pspta {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

#define PSPTA_DEFINE_ERROR(Name)                                   \
  class Name : public Error {                                      \
  public:                                                          \
    explicit Name(const std::string& what) : Error(what) {}        \
  };

// model I/O
PSPTA_DEFINE_ERROR(SchemaError)
PSPTA_DEFINE_ERROR(ExprError)
PSPTA_DEFINE_ERROR(RefError)
PSPTA_DEFINE_ERROR(UnsupportedFeature)
PSPTA_DEFINE_ERROR(NotFound)
PSPTA_DEFINE_ERROR(Ambiguous)

// property language
PSPTA_DEFINE_ERROR(RoleError)

// routing / instrumentation / catalog
PSPTA_DEFINE_ERROR(Unsupported)
PSPTA_DEFINE_ERROR(UnsupportedTarget)
PSPTA_DEFINE_ERROR(NameClash)
PSPTA_DEFINE_ERROR(TemplateMissing)
PSPTA_DEFINE_ERROR(BindingError)
PSPTA_DEFINE_ERROR(WrongProcess)

// oracle
PSPTA_DEFINE_ERROR(StateLimitExceeded)
PSPTA_DEFINE_ERROR(UnboundedVariable)
PSPTA_DEFINE_ERROR(NameError)
PSPTA_DEFINE_ERROR(UnsupportedSpec)
PSPTA_DEFINE_ERROR(RangeError)

#undef PSPTA_DEFINE_ERROR

/// Structured English syntax error; `position` is a byte offset into the input.
class GrammarError : public Error {
public:
  GrammarError(const std::string& what, std::size_t position)
      : Error(what + " (at offset " + std::to_string(position) + ")"), position_(position) {}

  std::size_t position() const noexcept { return position_; }

private:
  std::size_t position_;
};

} // namespace pspta
