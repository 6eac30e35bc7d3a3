#pragma once

#include <stdexcept>
#include <string>

namespace prooflens {

enum class ErrorCode {
  // sexpr / ast
  UnbalancedParens,
  EmptyInput,
  TrailingContent,
  EmptyList,
  NonAtomHead,
  // numcore
  ShapeMismatch,
  NotAScalar,
  KeyMismatch,
  NonFiniteValue,
  FileMissing,
  ManifestShapeMismatch,
  CorruptValue,
  // contrastive
  NonFiniteInput,
  EmptyCandidates,
  EmptyDataset,
  // decoder
  InvalidTree,
  NoValidProductions,
  NoPremises,
  GoldInvalid,
  MaxStepsExceeded,
  CheckpointMismatch,
  GrammarInvalid,
  // datagen
  MalformedLine,
  TooFewFiles,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace prooflens
