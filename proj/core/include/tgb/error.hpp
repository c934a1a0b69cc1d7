// Copyright 2026 The TGB Authors. All Rights Reserved.
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

#ifndef TGB_ERROR_HPP_
#define TGB_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace tgb {

// Base of every error thrown by the library. The CLI maps subclasses to exit
// codes, so keep the hierarchy flat.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shape or dimension disagreement between tensors.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Input that violates a documented precondition (out-of-range id, bad label,
// invalid span, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Invalid or inconsistent configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Filesystem or stream failure. The message always names the path.
class IoError : public Error {
 public:
  using Error::Error;
};

// Malformed checkpoint, or a checkpoint whose shapes disagree with the config.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

// A NaN or Inf appeared where finite values are required.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

}  // namespace tgb

#endif  // TGB_ERROR_HPP_
