#include "vulnesis/error.hpp"

namespace vulnesis {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::IllegalTransition: return "IllegalTransition";
    case ErrorCode::WrongState: return "WrongState";
    case ErrorCode::StaleProject: return "StaleProject";
    case ErrorCode::InvalidScale: return "InvalidScale";
    case ErrorCode::WrongArity: return "WrongArity";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::BadBandConfig: return "BadBandConfig";
    case ErrorCode::InvalidThresholds: return "InvalidThresholds";
    case ErrorCode::DuplicateAcceleration: return "DuplicateAcceleration";
    case ErrorCode::UnknownScenario: return "UnknownScenario";
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::DuplicateCode: return "DuplicateCode";
    case ErrorCode::UnknownCode: return "UnknownCode";
    case ErrorCode::UnreconciledTypes: return "UnreconciledTypes";
    case ErrorCode::NotAFeatureCollection: return "NotAFeatureCollection";
    case ErrorCode::MissingKeyProperty: return "MissingKeyProperty";
    case ErrorCode::UnknownBuilding: return "UnknownBuilding";
    case ErrorCode::IncompleteSurvey: return "IncompleteSurvey";
    case ErrorCode::DuplicateName: return "DuplicateName";
    case ErrorCode::UnknownMaster: return "UnknownMaster";
    case ErrorCode::KeyAlreadyAssigned: return "KeyAlreadyAssigned";
    case ErrorCode::KeyNotMember: return "KeyNotMember";
    case ErrorCode::UnknownTypology: return "UnknownTypology";
    case ErrorCode::BadSampleSpec: return "BadSampleSpec";
    case ErrorCode::QuotaExceedsPopulation: return "QuotaExceedsPopulation";
    case ErrorCode::UnassignedBuildingsRemain: return "UnassignedBuildingsRemain";
    case ErrorCode::NothingSurveyed: return "NothingSurveyed";
    case ErrorCode::DegenerateRing: return "DegenerateRing";
    case ErrorCode::NoBlocksLayer: return "NoBlocksLayer";
    case ErrorCode::MissingLayer: return "MissingLayer";
    case ErrorCode::UnknownLevel: return "UnknownLevel";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::SchemaTooNew: return "SchemaTooNew";
    case ErrorCode::CorruptFile: return "CorruptFile";
    case ErrorCode::UnknownKind: return "UnknownKind";
    case ErrorCode::LockHeld: return "LockHeld";
    case ErrorCode::UnknownProject: return "UnknownProject";
    case ErrorCode::DuplicateProject: return "DuplicateProject";
    case ErrorCode::BadRequest: return "BadRequest";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::BindFailure: return "BindFailure";
  }
  return "Unknown";
}

int http_status(ErrorCode code) noexcept {
  switch (code) {
    // state violations and conflicts
    case ErrorCode::IllegalTransition:
    case ErrorCode::WrongState:
    case ErrorCode::StaleProject:
    case ErrorCode::DuplicateAcceleration:
    case ErrorCode::DuplicateCode:
    case ErrorCode::UnreconciledTypes:
    case ErrorCode::DuplicateName:
    case ErrorCode::KeyAlreadyAssigned:
    case ErrorCode::UnassignedBuildingsRemain:
    case ErrorCode::NothingSurveyed:
    case ErrorCode::LockHeld:
    case ErrorCode::DuplicateProject:
      return 409;
    case ErrorCode::UnknownScenario:
    case ErrorCode::UnknownBuilding:
    case ErrorCode::UnknownMaster:
    case ErrorCode::UnknownTypology:
    case ErrorCode::UnknownProject:
    case ErrorCode::NotFound:
      return 404;
    case ErrorCode::IoFailure:
    case ErrorCode::SchemaTooNew:
    case ErrorCode::CorruptFile:
    case ErrorCode::UnknownKind:
    case ErrorCode::BindFailure:
      return 500;
    case ErrorCode::BadRequest:
      return 400;
    default:
      return 422;
  }
}

}  // namespace vulnesis
