/*
 Copyright 2026 The CKNet Authors

 Licensed under the Apache License, Version 2.0 (the "License");
 you may not use this file except in compliance with the License.
 You may obtain a copy of the License at

      https://www.apache.org/licenses/LICENSE-2.0

 Unless required by applicable law or agreed to in writing, software
 distributed under the License is distributed on an "AS IS" BASIS,
 WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 See the License for the specific language governing permissions and
 limitations under the License.
*/

#ifndef CKNET_ERRORS_HPP
#define CKNET_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cknet {

// Invalid or inconsistent configuration (bad dimensions, unknown names, ...).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Tensor or matrix shapes that do not line up.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Not enough frames/observations/steps to satisfy a request.
class InsufficientDataError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

// Numerical failure: defective spectrum, degenerate fit, non-finite loss.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Missing, unreadable or malformed files.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cknet

#endif  // CKNET_ERRORS_HPP
