// Copyright 2026 The ConvNat Authors. All Rights Reserved.
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

#ifndef CONVNAT_ERRORS_H_
#define CONVNAT_ERRORS_H_

#include <stdexcept>
#include <string>

namespace convnat {

// Base for every domain error raised by the library. The CLI maps these to
// exit status 1; UsageError maps to 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class ManifestError : public Error {
 public:
  using Error::Error;
};

class AudioError : public Error {
 public:
  using Error::Error;
};

class EncoderError : public Error {
 public:
  using Error::Error;
};

class ModelError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

class TrainingError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

// Correlation requested on an input with zero variance.
class DegenerateVarianceError : public MetricError {
 public:
  using MetricError::MetricError;
};

class HarnessError : public Error {
 public:
  using Error::Error;
};

class AugmentError : public Error {
 public:
  using Error::Error;
};

}  // namespace convnat

#endif  // CONVNAT_ERRORS_H_
