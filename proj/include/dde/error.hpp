#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dde {

// Broad failure classes; the CLI maps them onto exit codes.
enum class ErrorClass
{
  usage,
  data,
  numeric
};

class Error : public std::runtime_error
{
public:
  Error(ErrorClass cls, const std::string& what)
    : std::runtime_error(what), class_(cls)
  {}

  ErrorClass error_class() const noexcept { return class_; }

private:
  ErrorClass class_;
};

#define DDE_DEFINE_ERROR(Name, Class)                                          \
  class Name : public Error                                                    \
  {                                                                            \
  public:                                                                      \
    explicit Name(const std::string& what)                                     \
      : Error(ErrorClass::Class, std::string(#Name ": ") + what)               \
    {}                                                                         \
  };

DDE_DEFINE_ERROR(InvalidConfig, usage)
DDE_DEFINE_ERROR(FilterEmpty, usage)
DDE_DEFINE_ERROR(FormatError, data)
DDE_DEFINE_ERROR(LengthMismatch, data)
DDE_DEFINE_ERROR(ShapeMismatch, data)
DDE_DEFINE_ERROR(EmptySample, data)
DDE_DEFINE_ERROR(DegenerateSample, data)
DDE_DEFINE_ERROR(RetryExhausted, numeric)
DDE_DEFINE_ERROR(DegeneratePdf, numeric)
DDE_DEFINE_ERROR(LowAcceptance, numeric)
DDE_DEFINE_ERROR(NonFiniteLoss, numeric)
DDE_DEFINE_ERROR(AllDiverged, numeric)
DDE_DEFINE_ERROR(AllZero, numeric)

#undef DDE_DEFINE_ERROR

/// Raised when a k-NN query cannot find k non-identical neighbours. The
/// neighbour count is the lower bound on usable sample sizes.
class InsufficientPoints : public Error
{
public:
  InsufficientPoints(std::size_t needed, std::size_t available)
    : Error(ErrorClass::data,
            "InsufficientPoints: needed " + std::to_string(needed) +
              " non-identical neighbours, " + std::to_string(available) +
              " available")
    , needed_(needed)
    , available_(available)
  {}

  std::size_t needed() const noexcept { return needed_; }
  std::size_t available() const noexcept { return available_; }

private:
  std::size_t needed_;
  std::size_t available_;
};

} // namespace dde
