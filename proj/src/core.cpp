#include "renormalens/core.hpp"

#include <cstdlib>
#include <string>

namespace renormalens {

const char* errc_name(Errc c) noexcept {
  switch (c) {
    case Errc::NonNormalizable: return "NonNormalizable";
    case Errc::GridTooNarrow: return "GridTooNarrow";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::NonPositiveState: return "NonPositiveState";
    case Errc::InvalidSigma: return "InvalidSigma";
    case Errc::InvalidParameter: return "InvalidParameter";
    case Errc::InvalidState: return "InvalidState";
    case Errc::InvalidChannel: return "InvalidChannel";
    case Errc::ZeroFeature: return "ZeroFeature";
    case Errc::IncompleteSpan: return "IncompleteSpan";
    case Errc::DimensionTooLarge: return "DimensionTooLarge";
    case Errc::SingularX: return "SingularX";
    case Errc::ModeCouplingDetected: return "ModeCouplingDetected";
    case Errc::BasisTooLarge: return "BasisTooLarge";
    case Errc::UnsupportedInteraction: return "UnsupportedInteraction";
    case Errc::TruncationMismatch: return "TruncationMismatch";
    case Errc::DegeneracyUnresolved: return "DegeneracyUnresolved";
    case Errc::NoConvergence: return "NoConvergence";
  }
  return "Unknown";
}

bool is_validation_error(Errc c) noexcept {
  switch (c) {
    case Errc::NonNormalizable:
    case Errc::GridTooNarrow:
    case Errc::DimensionMismatch:
    case Errc::InvalidSigma:
    case Errc::InvalidParameter:
    case Errc::InvalidState:
    case Errc::InvalidChannel:
    case Errc::UnsupportedInteraction:
    case Errc::TruncationMismatch:
    case Errc::BasisTooLarge:
    case Errc::DimensionTooLarge:
      return true;
    default:
      return false;
  }
}

Error::Error(Errc code, const std::string& what)
    : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

void fail(Errc code, const std::string& what) { throw Error(code, what); }

unsigned thread_count() {
  unsigned hw = std::thread::hardware_concurrency();
  if (hw == 0) hw = 1;
  if (const char* env = std::getenv("RENORMALENS_THREADS")) {
    char* end = nullptr;
    long v = std::strtol(env, &end, 10);
    if (end != env && v >= 1) return std::min<unsigned>(hw, static_cast<unsigned>(v));
  }
  return hw;
}

}  // namespace renormalens
