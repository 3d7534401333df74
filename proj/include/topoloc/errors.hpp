#pragma once

#include <stdexcept>
#include <string>

namespace topoloc {

// Base for all toolkit errors. `name()` is the stable identifier the CLI
// prints and maps to exit codes; `what()` carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(std::string name, const std::string& msg)
      : std::runtime_error(name + ": " + msg), name_(std::move(name)) {}
  const std::string& name() const { return name_; }

 private:
  std::string name_;
};

#define TOPOLOC_DEFINE_ERROR(Name)                       \
  class Name : public Error {                            \
   public:                                               \
    explicit Name(const std::string& msg = "")           \
        : Error(#Name, msg) {}                           \
  }

TOPOLOC_DEFINE_ERROR(EmptyImage);
TOPOLOC_DEFINE_ERROR(DegenerateInput);
TOPOLOC_DEFINE_ERROR(EmptyScan);
TOPOLOC_DEFINE_ERROR(EmptyRun);
TOPOLOC_DEFINE_ERROR(CorruptMap);
TOPOLOC_DEFINE_ERROR(UnknownLocation);
TOPOLOC_DEFINE_ERROR(LengthMismatch);
TOPOLOC_DEFINE_ERROR(Empty);
TOPOLOC_DEFINE_ERROR(UninitializedState);
TOPOLOC_DEFINE_ERROR(InvalidParams);
TOPOLOC_DEFINE_ERROR(OutOfBounds);
TOPOLOC_DEFINE_ERROR(UsageError);
TOPOLOC_DEFINE_ERROR(IoError);

#undef TOPOLOC_DEFINE_ERROR

}  // namespace topoloc
