#pragma once

#include <stdexcept>
#include <string>

namespace ddnav {

// Base for every domain failure the library reports. The CLI maps these to
// exit code 1; anything else escaping is a bug.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define DDNAV_DEFINE_ERROR(Name)           \
  class Name : public Error {              \
   public:                                 \
    using Error::Error;                    \
  };

DDNAV_DEFINE_ERROR(ConfigError)
DDNAV_DEFINE_ERROR(ParseError)
DDNAV_DEFINE_ERROR(ValidationError)
DDNAV_DEFINE_ERROR(UnknownObject)
DDNAV_DEFINE_ERROR(Unreachable)
DDNAV_DEFINE_ERROR(NoPath)
DDNAV_DEFINE_ERROR(UnknownDemand)
DDNAV_DEFINE_ERROR(BackendError)
DDNAV_DEFINE_ERROR(AuthError)
DDNAV_DEFINE_ERROR(MissingBinding)
DDNAV_DEFINE_ERROR(StorageError)
DDNAV_DEFINE_ERROR(EmptyKnowledgeBase)
DDNAV_DEFINE_ERROR(EmptySet)

#undef DDNAV_DEFINE_ERROR

}  // namespace ddnav
