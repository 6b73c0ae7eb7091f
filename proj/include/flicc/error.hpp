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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace flicc {

// Every failure the library reports carries one of these codes. The names are
// part of the external surface: they appear in CLI messages, HTTP error bodies
// and the Python exception attribute `code`.
enum class ErrorCode {
  kUnknownLabel,
  kParseError,
  kDuplicateId,
  kEmptyText,
  kEmptyInput,
  kInsufficientSamples,
  kUntaggedSample,
  kInvalidArgument,
  kEncoderUnavailable,
  kZeroVector,
  kDimensionMismatch,
  kMissingEmbedding,
  kTooFewSamples,
  kIoError,
  kLengthMismatch,
  kInvalidSimplex,
  kCheckpointUnavailable,
  kUnsupportedCheckpoint,
  kOutOfMemory,
  kDivergedLoss,
  kAuthError,
  kRateLimited,
  kProviderError,
  kArtifactCorrupt,
  kVersionMismatch,
  kBindFailure,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace flicc
