// SPDX-License-Identifier: Apache-2.0
//
// cfpos: fingerprint positioning toolkit for cell-free massive MIMO networks
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef CFPOS_ERRORS_HPP
#define CFPOS_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace cfpos
{

// Invalid experiment or operation configuration (bad counts, non-square grids, unknown keys).
class ConfigError : public std::invalid_argument
{
public:
    using std::invalid_argument::invalid_argument;
};

// Input outside the mathematical domain of an operation (non-positive distance, coincident sites).
class DomainError : public std::domain_error
{
public:
    using std::domain_error::domain_error;
};

// Cholesky factorization failed even after the maximum diagonal jitter.
class NotPsdError : public std::runtime_error
{
public:
    NotPsdError(const std::string &what, double attempted_jitter)
        : std::runtime_error(what), jitter_(attempted_jitter) {}
    double attempted_jitter() const noexcept { return jitter_; }

private:
    double jitter_;
};

// Hyperparameter learning produced no finite objective on any restart.
class TrainingError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// File system failures; the message carries the offending path.
class IoError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace cfpos

#endif
