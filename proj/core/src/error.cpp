#include "sgt/error.hpp"

namespace sgt {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownNode: return "UnknownNode";
    case ErrorCode::DuplicateNode: return "DuplicateNode";
    case ErrorCode::UnknownSymbol: return "UnknownSymbol";
    case ErrorCode::SelfLoop: return "SelfLoop";
    case ErrorCode::DuplicateEdge: return "DuplicateEdge";
    case ErrorCode::NoSuchEdge: return "NoSuchEdge";
    case ErrorCode::SchemaMissingInverse: return "SchemaMissingInverse";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ContextOverflow: return "ContextOverflow";
    case ErrorCode::FramingError: return "FramingError";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::GenerationFailure: return "GenerationFailure";
    case ErrorCode::IoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace sgt
