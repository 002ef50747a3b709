#pragma once

#include <string>

#include "vulnesis/domain.hpp"

namespace vulnesis {

struct FieldForms {
  /// Every building with its identification and blank x, y, photo columns.
  std::string matrix_csv;
  /// One row per building selected for the survey: blank class columns
  /// p1..p11 and raw form fields, cadastral values pre-filled for checking.
  /// The layout is accepted back by parse_field_data.
  std::string survey_csv;
};

/// Throws WrongState before the sample is drawn.
FieldForms export_field_forms(const Project& project);

}  // namespace vulnesis
