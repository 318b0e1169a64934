#include "loopgraft/error.hpp"

namespace loopgraft {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NoAtoms: return "NoAtoms";
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::InvalidId: return "InvalidId";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::NetworkFailure: return "NetworkFailure";
    case ErrorCode::UnknownChain: return "UnknownChain";
    case ErrorCode::MissingBackbone: return "MissingBackbone";
    case ErrorCode::RangeOutOfChain: return "RangeOutOfChain";
    case ErrorCode::InvertedRange: return "InvertedRange";
    case ErrorCode::TooFewSegments: return "TooFewSegments";
    case ErrorCode::NoAperiodicContent: return "NoAperiodicContent";
    case ErrorCode::UnknownLoop: return "UnknownLoop";
    case ErrorCode::DegenerateSegment: return "DegenerateSegment";
    case ErrorCode::EmptyInsertSet: return "EmptyInsertSet";
    case ErrorCode::DisconnectedContactGraph: return "DisconnectedContactGraph";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::TooFewResidues: return "TooFewResidues";
    case ErrorCode::EmptyElement: return "EmptyElement";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::UnknownMetric: return "UnknownMetric";
    case ErrorCode::DegenerateRange: return "DegenerateRange";
    case ErrorCode::MissingAnchorAtoms: return "MissingAnchorAtoms";
    case ErrorCode::ClippedAnchor: return "ClippedAnchor";
    case ErrorCode::AdapterLaunchFailure: return "AdapterLaunchFailure";
    case ErrorCode::AdapterParseFailure: return "AdapterParseFailure";
    case ErrorCode::AdapterTimeout: return "AdapterTimeout";
    case ErrorCode::MissingScoreKey: return "MissingScoreKey";
    case ErrorCode::GateUnsatisfied: return "GateUnsatisfied";
    case ErrorCode::EmptySpecs: return "EmptySpecs";
    case ErrorCode::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case ErrorCode::UnknownSession: return "UnknownSession";
    case ErrorCode::UnknownJob: return "UnknownJob";
    case ErrorCode::BadRequest: return "BadRequest";
  }
  return "Unknown";
}

}  // namespace loopgraft
