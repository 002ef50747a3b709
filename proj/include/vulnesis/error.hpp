#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vulnesis {

/// Machine-readable failure kinds. Every module error maps to exactly one
/// code; the service layer turns codes into HTTP statuses.
enum class ErrorCode {
  // workflow
  IllegalTransition,
  WrongState,
  StaleProject,
  // risk engine
  InvalidScale,
  WrongArity,
  OutOfRange,
  BadBandConfig,
  InvalidThresholds,
  DuplicateAcceleration,
  UnknownScenario,
  // ingest
  MissingColumn,
  DuplicateCode,
  UnknownCode,
  UnreconciledTypes,
  NotAFeatureCollection,
  MissingKeyProperty,
  UnknownBuilding,
  IncompleteSurvey,
  // typology
  DuplicateName,
  UnknownMaster,
  KeyAlreadyAssigned,
  KeyNotMember,
  UnknownTypology,
  BadSampleSpec,
  QuotaExceedsPopulation,
  UnassignedBuildingsRemain,
  NothingSurveyed,
  // geo
  DegenerateRing,
  NoBlocksLayer,
  MissingLayer,
  UnknownLevel,
  // store
  IoFailure,
  SchemaTooNew,
  CorruptFile,
  UnknownKind,
  LockHeld,
  UnknownProject,
  DuplicateProject,
  // service
  BadRequest,
  NotFound,
  BindFailure,
};

std::string_view to_string(ErrorCode code) noexcept;

/// HTTP status used when the code crosses the service boundary.
int http_status(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vulnesis
