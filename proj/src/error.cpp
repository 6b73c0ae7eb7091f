// Copyright 2026 The flicc-workbench Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "flicc/error.hpp"

namespace flicc {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnknownLabel: return "UnknownLabel";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kEmptyText: return "EmptyText";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kInsufficientSamples: return "InsufficientSamples";
    case ErrorCode::kUntaggedSample: return "UntaggedSample";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kEncoderUnavailable: return "EncoderUnavailable";
    case ErrorCode::kZeroVector: return "ZeroVector";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kMissingEmbedding: return "MissingEmbedding";
    case ErrorCode::kTooFewSamples: return "TooFewSamples";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kInvalidSimplex: return "InvalidSimplex";
    case ErrorCode::kCheckpointUnavailable: return "CheckpointUnavailable";
    case ErrorCode::kUnsupportedCheckpoint: return "UnsupportedCheckpoint";
    case ErrorCode::kOutOfMemory: return "OutOfMemory";
    case ErrorCode::kDivergedLoss: return "DivergedLoss";
    case ErrorCode::kAuthError: return "AuthError";
    case ErrorCode::kRateLimited: return "RateLimited";
    case ErrorCode::kProviderError: return "ProviderError";
    case ErrorCode::kArtifactCorrupt: return "ArtifactCorrupt";
    case ErrorCode::kVersionMismatch: return "VersionMismatch";
    case ErrorCode::kBindFailure: return "BindFailure";
  }
  return "Unknown";
}

}  // namespace flicc
