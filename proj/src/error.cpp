#include "prooflens/error.hpp"

namespace prooflens {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnbalancedParens: return "UnbalancedParens";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::TrailingContent: return "TrailingContent";
    case ErrorCode::EmptyList: return "EmptyList";
    case ErrorCode::NonAtomHead: return "NonAtomHead";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NotAScalar: return "NotAScalar";
    case ErrorCode::KeyMismatch: return "KeyMismatch";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::FileMissing: return "FileMissing";
    case ErrorCode::ManifestShapeMismatch: return "ManifestShapeMismatch";
    case ErrorCode::CorruptValue: return "CorruptValue";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::EmptyCandidates: return "EmptyCandidates";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::InvalidTree: return "InvalidTree";
    case ErrorCode::NoValidProductions: return "NoValidProductions";
    case ErrorCode::NoPremises: return "NoPremises";
    case ErrorCode::GoldInvalid: return "GoldInvalid";
    case ErrorCode::MaxStepsExceeded: return "MaxStepsExceeded";
    case ErrorCode::CheckpointMismatch: return "CheckpointMismatch";
    case ErrorCode::GrammarInvalid: return "GrammarInvalid";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::TooFewFiles: return "TooFewFiles";
  }
  return "UnknownError";
}

}  // namespace prooflens
