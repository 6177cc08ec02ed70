#pragma once

#include <stdexcept>
#include <string>

namespace csi {

/// Broad failure class, used by the CLI to choose an exit code.
enum class ErrorKind { Input, Numerical };

class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what, ErrorKind kind)
      : std::runtime_error(what), code_(std::move(code)), kind_(kind) {}

  const std::string& code() const noexcept { return code_; }
  ErrorKind kind() const noexcept { return kind_; }

 private:
  std::string code_;
  ErrorKind kind_;
};

#define CSI_DEFINE_ERROR(Name, Kind)                                        \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& what) : Error(#Name, what, Kind) {}    \
  };

CSI_DEFINE_ERROR(DimensionError, ErrorKind::Input)
CSI_DEFINE_ERROR(InvalidSpecies, ErrorKind::Input)
CSI_DEFINE_ERROR(InvalidEchoes, ErrorKind::Input)
CSI_DEFINE_ERROR(SpecError, ErrorKind::Input)
CSI_DEFINE_ERROR(FormatError, ErrorKind::Input)
CSI_DEFINE_ERROR(DomainError, ErrorKind::Input)
CSI_DEFINE_ERROR(CombinatorialLimit, ErrorKind::Input)
CSI_DEFINE_ERROR(PolynomialDegreeLimit, ErrorKind::Input)
CSI_DEFINE_ERROR(RankDeficient, ErrorKind::Numerical)
CSI_DEFINE_ERROR(OverflowRisk, ErrorKind::Numerical)
CSI_DEFINE_ERROR(DegenerateCurvature, ErrorKind::Numerical)
CSI_DEFINE_ERROR(NonBracketed, ErrorKind::Numerical)
CSI_DEFINE_ERROR(NonConvergence, ErrorKind::Numerical)

#undef CSI_DEFINE_ERROR

}  // namespace csi
