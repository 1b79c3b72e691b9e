// Copyright 2026 The AnonCodec Authors
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

#ifndef ANONCODEC_CORE_ERROR_HPP_
#define ANONCODEC_CORE_ERROR_HPP_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace anoncodec {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input that makes an operation undefined (zero vectors under cosine, ...).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

/// Index, count or shape outside the accepted domain.
class RangeError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or command-line usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A file that does not exist or cannot be opened.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure during a computation (non-finite loss, ...).
class ComputationError : public Error {
 public:
  using Error::Error;
};

/// Malformed binary or text input. Carries the byte offset of the fault.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::uint64_t offset)
      : Error(what + " at byte offset " + std::to_string(offset)),
        offset_(offset) {}

  std::uint64_t offset() const noexcept { return offset_; }

 private:
  std::uint64_t offset_;
};

}  // namespace anoncodec

#endif  // ANONCODEC_CORE_ERROR_HPP_
