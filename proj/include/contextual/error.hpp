// Copyright 2026 The ConTextual Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace contextual {

enum class ErrorKind {
  file_not_found,
  io_error,
  parse_error,
  duplicate_note_id,
  unknown_tag,
  format_error,
  invariant_violation,
  empty_sequence,
  invalid_alpha,
  invalid_layer_count,
  invalid_retention,
  layer_out_of_range,
  shape_mismatch,
  length_mismatch,
  unknown_entity_type,
  invalid_hops,
  referential_integrity,
  backend_unreachable,
  http_status,
  timeout,
  rate_limited,
  malformed_response,
  unparseable_judge_output,
  script_exhausted,
  empty_references,
  empty_input,
  empty_records,
  id_mismatch,
  invalid_config,
  invalid_argument,
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::file_not_found: return "FileNotFound";
    case ErrorKind::io_error: return "IoError";
    case ErrorKind::parse_error: return "ParseError";
    case ErrorKind::duplicate_note_id: return "DuplicateNoteId";
    case ErrorKind::unknown_tag: return "UnknownTag";
    case ErrorKind::format_error: return "FormatError";
    case ErrorKind::invariant_violation: return "InvariantViolation";
    case ErrorKind::empty_sequence: return "EmptySequence";
    case ErrorKind::invalid_alpha: return "InvalidAlpha";
    case ErrorKind::invalid_layer_count: return "InvalidLayerCount";
    case ErrorKind::invalid_retention: return "InvalidRetention";
    case ErrorKind::layer_out_of_range: return "LayerOutOfRange";
    case ErrorKind::shape_mismatch: return "ShapeMismatch";
    case ErrorKind::length_mismatch: return "LengthMismatch";
    case ErrorKind::unknown_entity_type: return "UnknownEntityType";
    case ErrorKind::invalid_hops: return "InvalidHops";
    case ErrorKind::referential_integrity: return "ReferentialIntegrityError";
    case ErrorKind::backend_unreachable: return "BackendUnreachable";
    case ErrorKind::http_status: return "HttpStatus";
    case ErrorKind::timeout: return "Timeout";
    case ErrorKind::rate_limited: return "RateLimited";
    case ErrorKind::malformed_response: return "MalformedResponse";
    case ErrorKind::unparseable_judge_output: return "UnparseableJudgeOutput";
    case ErrorKind::script_exhausted: return "ScriptExhausted";
    case ErrorKind::empty_references: return "EmptyReferences";
    case ErrorKind::empty_input: return "EmptyInput";
    case ErrorKind::empty_records: return "EmptyRecords";
    case ErrorKind::id_mismatch: return "IdMismatch";
    case ErrorKind::invalid_config: return "InvalidConfig";
    case ErrorKind::invalid_argument: return "InvalidArgument";
  }
  return "Error";
}

/// Single exception type for the whole library; `kind()` tells callers what
/// went wrong, `detail()` carries an HTTP status code where applicable.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, int detail = 0)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        detail_(detail) {}

  ErrorKind kind() const noexcept { return kind_; }
  int detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  int detail_;
};

}  // namespace contextual
