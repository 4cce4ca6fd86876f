/*
 * Copyright 2026 The plfm Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#pragma once

#include <stdexcept>
#include <string>

namespace plfm {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidParameter : Error {
  using Error::Error;
};

struct NumericError : Error {
  using Error::Error;
};

struct NotDifferentiable : Error {
  using Error::Error;
};

struct IndexError : Error {
  using Error::Error;
};

struct NoStationaryDistribution : Error {
  using Error::Error;
};

struct NotStationary : Error {
  using Error::Error;
};

// Caller broke an ordering or alignment contract (e.g. changepoint inside a step).
struct ContractViolation : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

}  // namespace plfm
