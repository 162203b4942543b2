#include "rsweep/error.hpp"

namespace rsweep {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveDepth: return "NonPositiveDepth";
    case ErrorCode::NonUnitNormal: return "NonUnitNormal";
    case ErrorCode::SingularLighting: return "SingularLighting";
    case ErrorCode::DegenerateRadiance: return "DegenerateRadiance";
    case ErrorCode::NormOverflow: return "NormOverflow";
    case ErrorCode::GrazingNormal: return "GrazingNormal";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::RayPlaneParallel: return "RayPlaneParallel";
    case ErrorCode::TooFewValidViews: return "TooFewValidViews";
    case ErrorCode::NoValidHypothesis: return "NoValidHypothesis";
    case ErrorCode::InsufficientViews: return "InsufficientViews";
    case ErrorCode::EmptyOverlap: return "EmptyOverlap";
    case ErrorCode::EmptyCloud: return "EmptyCloud";
    case ErrorCode::FiniteRequired: return "FiniteRequired";
    case ErrorCode::MalformedHeader: return "MalformedHeader";
    case ErrorCode::TruncatedData: return "TruncatedData";
    case ErrorCode::UnsupportedScale: return "UnsupportedScale";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::NonRigidRotation: return "NonRigidRotation";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "UnknownError";
}

}  // namespace rsweep
