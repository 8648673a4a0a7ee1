// Copyright (c) the SNE Toolkit Authors
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

namespace sne {

// Shape mismatch between tensors; the message names both shapes.
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Invalid scalar argument (negative variance, zero clip, ...).
struct ParamError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Image/grid geometry that the requested operation cannot handle.
struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed or incomplete checkpoint container.
struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A loss function produced different values on identical inputs.
struct DeterminismError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// File I/O or on-disk format failure.
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad key/value run configuration.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sne
