#pragma once

#include <stdexcept>
#include <string>

namespace liberum {

enum class ErrorKind {
  InvalidInput,
  InvalidAction,
  EpisodeFinished,
  UnknownTransition,
  NoConvergence,
  OracleUnavailable,
  ConfigError,
  IoError,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::InvalidAction: return "InvalidAction";
    case ErrorKind::EpisodeFinished: return "EpisodeFinished";
    case ErrorKind::UnknownTransition: return "UnknownTransition";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::OracleUnavailable: return "OracleUnavailable";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

// Base of every exception thrown by the library. Catch the concrete type to
// react to one failure mode, or Error and inspect kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define LIBERUM_DEFINE_ERROR(Name)                                        \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& what) : Error(ErrorKind::Name, what) {} \
  };

LIBERUM_DEFINE_ERROR(InvalidInput)
LIBERUM_DEFINE_ERROR(InvalidAction)
LIBERUM_DEFINE_ERROR(EpisodeFinished)
LIBERUM_DEFINE_ERROR(UnknownTransition)
LIBERUM_DEFINE_ERROR(NoConvergence)
LIBERUM_DEFINE_ERROR(OracleUnavailable)
LIBERUM_DEFINE_ERROR(ConfigError)
LIBERUM_DEFINE_ERROR(IoError)

#undef LIBERUM_DEFINE_ERROR

}  // namespace liberum
