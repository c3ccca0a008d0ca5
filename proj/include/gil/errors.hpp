#pragma once

#include <stdexcept>
#include <string>

namespace gil {

/// Base class for every error raised by the library. The harness maps
/// these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define GIL_DEFINE_ERROR(Name)            \
  class Name : public Error {             \
   public:                                \
    using Error::Error;                   \
  }

GIL_DEFINE_ERROR(PlacementExhausted);
GIL_DEFINE_ERROR(UnknownObject);
GIL_DEFINE_ERROR(Unplannable);
GIL_DEFINE_ERROR(ExecutionFault);
GIL_DEFINE_ERROR(DegenerateSkeleton);
GIL_DEFINE_ERROR(UntrainedModel);
GIL_DEFINE_ERROR(TooShort);
GIL_DEFINE_ERROR(InsufficientDemos);
GIL_DEFINE_ERROR(UnknownClass);
GIL_DEFINE_ERROR(IndexOutOfRange);
GIL_DEFINE_ERROR(TooFewRecords);
GIL_DEFINE_ERROR(IoError);
GIL_DEFINE_ERROR(SchemaMismatch);
GIL_DEFINE_ERROR(ShapeMismatch);
GIL_DEFINE_ERROR(NonFiniteGradient);
GIL_DEFINE_ERROR(EmptyInput);
GIL_DEFINE_ERROR(NoConfidentIntent);

#undef GIL_DEFINE_ERROR

}  // namespace gil
