#pragma once

#include <stdexcept>
#include <string>

namespace qthru {

enum class ErrorKind {
    SpecInvalid,      // malformed or inconsistent network input
    AssumptionFailed, // static model fails a required structural condition
    RegimeViolated,   // scale/epsilon too coarse for the control construction
    Internal,         // consistency check between two independent methods failed
    Usage,            // bad parameters
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

  private:
    ErrorKind kind_;
};

inline Error spec_error(const std::string& w) { return Error(ErrorKind::SpecInvalid, w); }
inline Error assumption_error(const std::string& w) { return Error(ErrorKind::AssumptionFailed, w); }
inline Error regime_error(const std::string& w) { return Error(ErrorKind::RegimeViolated, w); }
inline Error internal_error(const std::string& w) { return Error(ErrorKind::Internal, w); }
inline Error usage_error(const std::string& w) { return Error(ErrorKind::Usage, w); }

}  // namespace qthru
