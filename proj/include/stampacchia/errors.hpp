#pragma once

#include <stdexcept>
#include <string>

namespace stampacchia {

/// Base class for every error raised by the library. The `kind()` string is
/// stable and used by the CLI to label failures.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(kind + ": " + what), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

private:
  std::string kind_;
};

#define STAMPACCHIA_ERROR(Name)                                                \
  class Name : public Error {                                                  \
  public:                                                                      \
    explicit Name(const std::string& what) : Error(#Name, what) {}             \
  }

STAMPACCHIA_ERROR(PreconditionViolation);
STAMPACCHIA_ERROR(MeshFormatError);
STAMPACCHIA_ERROR(DimensionMismatch);
STAMPACCHIA_ERROR(IncompatibleFunctional);
STAMPACCHIA_ERROR(NonConvergence);
STAMPACCHIA_ERROR(NotMeanZero);
STAMPACCHIA_ERROR(NotElliptic);
STAMPACCHIA_ERROR(DisconnectedMesh);
STAMPACCHIA_ERROR(ExponentPrecondition);
STAMPACCHIA_ERROR(BetaNotSupercritical);
STAMPACCHIA_ERROR(ConfigInvalid);

#undef STAMPACCHIA_ERROR

} // namespace stampacchia
