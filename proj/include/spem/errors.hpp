// Copyright 2026 The spem Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#pragma once

#include <stdexcept>
#include <string>

namespace spem {

/// Base for numeric and convergence failures (CLI exit code 2).
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularMatrixError : public NumericError {
public:
    using NumericError::NumericError;
};

class PostSelectionError : public NumericError {
public:
    using NumericError::NumericError;
};

class TrainingError : public NumericError {
public:
    using NumericError::NumericError;
};

/// Malformed configuration, arguments, or artifact files (CLI exit code 1).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace spem
