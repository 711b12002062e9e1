// Copyright 2026 The equiaudit Authors.
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

#ifndef EQUIAUDIT_ERRORS_HPP
#define EQUIAUDIT_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace equiaudit {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A support, receptive field or warped image does not fit the sampled domain.
/// Carries the smallest extent that would have been sufficient, when known.
class DomainFitError : public Error {
 public:
  explicit DomainFitError(const std::string& what, double required_extent = 0.0)
      : Error(what), required_extent_(required_extent) {}

  double required_extent() const noexcept { return required_extent_; }

 private:
  double required_extent_;
};

class SingularMapError : public Error {
 public:
  using Error::Error;
};

class GeometryMismatchError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

class ClassificationError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  using Error::Error;
};

}  // namespace equiaudit

#endif  // EQUIAUDIT_ERRORS_HPP
