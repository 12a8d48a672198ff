#pragma once

#include <stdexcept>
#include <string>

namespace mmpipe {

/// Base class for all library errors. `kind()` is a stable machine-readable
/// name; `what()` carries the human-readable detail.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define MMPIPE_DEFINE_ERROR(NAME)                            \
  class NAME final : public Error {                         \
   public:                                                  \
    explicit NAME(const std::string& message)               \
        : Error(#NAME, message) {}                          \
  }

// corpus
MMPIPE_DEFINE_ERROR(MalformedMarkup);
MMPIPE_DEFINE_ERROR(InvalidParams);

// mixture
MMPIPE_DEFINE_ERROR(BadWeights);
MMPIPE_DEFINE_ERROR(EmptySource);

// packer
MMPIPE_DEFINE_ERROR(OversizedSlot);
MMPIPE_DEFINE_ERROR(InvalidPlan);

// visgeom
MMPIPE_DEFINE_ERROR(IndivisibleResolution);
MMPIPE_DEFINE_ERROR(ShapeMismatch);

// scaling
MMPIPE_DEFINE_ERROR(Degenerate);
MMPIPE_DEFINE_ERROR(OutOfRange);

// moe
MMPIPE_DEFINE_ERROR(NonFinite);

// evalkit
MMPIPE_DEFINE_ERROR(InsufficientData);
MMPIPE_DEFINE_ERROR(MissingField);
MMPIPE_DEFINE_ERROR(WrongAnnotatorCount);
MMPIPE_DEFINE_ERROR(EmptyCorpus);
MMPIPE_DEFINE_ERROR(MissingBaseline);
MMPIPE_DEFINE_ERROR(ZeroBaseline);

// io
MMPIPE_DEFINE_ERROR(ParseError);
MMPIPE_DEFINE_ERROR(IoError);

#undef MMPIPE_DEFINE_ERROR

}  // namespace mmpipe
