#include "edunkl/types.hpp"

namespace edunkl {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotLatticePreserving: return "NotLatticePreserving";
    case ErrorCode::NotFinite: return "NotFinite";
    case ErrorCode::NonCyclicStabilizer: return "NonCyclicStabilizer";
    case ErrorCode::DegenerateTransverseLattice: return "DegenerateTransverseLattice";
    case ErrorCode::TrivialBundleParameter: return "TrivialBundleParameter";
    case ErrorCode::PoleEvaluation: return "PoleEvaluation";
    case ErrorCode::StabilizedBundle: return "StabilizedBundle";
    case ErrorCode::NotDescendable: return "NotDescendable";
    case ErrorCode::TrivialOnTransverseCurve: return "TrivialOnTransverseCurve";
    case ErrorCode::OrderOverflow: return "OrderOverflow";
    case ErrorCode::SamplePointTooClose: return "SamplePointTooClose";
    case ErrorCode::BasepointOnHypertorus: return "BasepointOnHypertorus";
    case ErrorCode::StepUnderflow: return "StepUnderflow";
    case ErrorCode::ToleranceNotMet: return "ToleranceNotMet";
    case ErrorCode::Unsupported: return "Unsupported";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace edunkl
