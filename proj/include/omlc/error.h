// Copyright 2026 The OMLC Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OMLC_ERROR_H_
#define OMLC_ERROR_H_

#include <stdexcept>
#include <string>

namespace omlc {

enum class ErrorCode {
  kInvalidArgument,
  kShapeMismatch,
  kIo,
  kBadMagic,
  kBadVersion,
  kTruncated,
  kChecksumMismatch,
  kFormat,
  kNumerical,
};

const char* ErrorCodeName(ErrorCode code);

// Process exit code for the command-line tool: 2 usage, 3 I/O,
// 4 format/checksum, 5 numerical failure.
int ExitCodeFor(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

#define OMLC_CHECK_ARG(cond, msg)                                  \
  do {                                                             \
    if (!(cond)) throw ::omlc::Error(::omlc::ErrorCode::kInvalidArgument, msg); \
  } while (0)

}  // namespace omlc

#endif  // OMLC_ERROR_H_
