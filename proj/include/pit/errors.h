// pit/errors.h

// Copyright 2026  PIT-ASR Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#ifndef PIT_ERRORS_H_
#define PIT_ERRORS_H_

#include <stdexcept>
#include <string>

namespace pit {

/// Base of every error raised by the library. The CLI maps these to exit 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Input data violates a documented precondition (labels out of range,
/// mismatched lengths, bad configuration values).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A NaN or infinity showed up where a finite value is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// API misuse, e.g. calling backward twice on one graph.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// Problem size outside what the implementation supports.
class UnsupportedSizeError : public Error {
 public:
  using Error::Error;
};

/// File system or serialization failure; the message names the path.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace pit

#endif  // PIT_ERRORS_H_
