#pragma once

#include <stdexcept>
#include <string>

namespace levytree {

// Exit-code classes used by the CLI: 2 config, 3 io, 4 numeric/domain.
enum class ErrorClass { config = 2, io = 3, numeric = 4 };

class Error : public std::runtime_error {
 public:
  Error(ErrorClass cls, const std::string& what) : std::runtime_error(what), cls_(cls) {}
  ErrorClass error_class() const { return cls_; }

 private:
  ErrorClass cls_;
};

#define LEVYTREE_DEFINE_ERROR(name, cls)                                  \
  class name : public Error {                                             \
   public:                                                                \
    explicit name(const std::string& what) : Error(ErrorClass::cls, what) {} \
  }

LEVYTREE_DEFINE_ERROR(DomainError, numeric);
LEVYTREE_DEFINE_ERROR(QuadratureError, numeric);
LEVYTREE_DEFINE_ERROR(NoRootError, numeric);
LEVYTREE_DEFINE_ERROR(EmptyExcursionError, numeric);
LEVYTREE_DEFINE_ERROR(InvalidLocationError, numeric);
LEVYTREE_DEFINE_ERROR(ZeroMassError, numeric);
LEVYTREE_DEFINE_ERROR(InfiniteTreeError, numeric);
LEVYTREE_DEFINE_ERROR(EmptyCorrespondenceError, numeric);
LEVYTREE_DEFINE_ERROR(SizeLimitError, numeric);
LEVYTREE_DEFINE_ERROR(RangeError, numeric);
LEVYTREE_DEFINE_ERROR(StepTooCoarseError, numeric);
LEVYTREE_DEFINE_ERROR(EnvelopeError, numeric);
LEVYTREE_DEFINE_ERROR(RejectionBudgetError, numeric);
LEVYTREE_DEFINE_ERROR(ConfigError, config);
LEVYTREE_DEFINE_ERROR(IoError, io);
LEVYTREE_DEFINE_ERROR(SchemaMismatchError, io);

#undef LEVYTREE_DEFINE_ERROR

}  // namespace levytree
