/* Copyright 2026 The SSSM Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/
#ifndef SSSM_ERROR_H_
#define SSSM_ERROR_H_

#include <cstdint>
#include <stdexcept>
#include <string>

namespace sssm {

// Shape mismatch, bad argument, violated precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A forward result or loss contained NaN/Inf.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed file contents. offset() is the byte position where parsing failed.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::uint64_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        message_(what),
        offset_(offset) {}
  std::uint64_t offset() const { return offset_; }
  // what() without the offset suffix
  const std::string& message() const { return message_; }

 private:
  std::string message_;
  std::uint64_t offset_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Metric requested over a mask with no valid pixels.
class EmptyEvaluation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sssm

#endif  // SSSM_ERROR_H_
