// Copyright (C) 2026 The dtbeam Authors
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

#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace dtbeam
{

// Base class for every error raised by the library. The CLI maps
// ConfigError to exit code 1 and everything else to exit code 2.
class Error : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

// Invalid parameters or inconsistent configuration.
class ConfigError : public Error
{
public:
    using Error::Error;
};

// Malformed file content. Carries the 1-based line/row when known.
class FormatError : public Error
{
public:
    explicit FormatError(const std::string& what, std::optional<std::size_t> row = std::nullopt)
        : Error(row ? what + " (row " + std::to_string(*row) + ")" : what), row_(row)
    {
    }

    std::optional<std::size_t> row() const noexcept { return row_; }

private:
    std::optional<std::size_t> row_;
};

// Well-formed input that is inconsistent (id mismatch, empty metric input, ...).
class DataError : public Error
{
public:
    using Error::Error;
};

// Positions too close to the origin for pathloss or azimuth to be defined.
class GeometryError : public Error
{
public:
    using Error::Error;
};

class NotFoundError : public Error
{
public:
    using Error::Error;
};

// Non-finite loss during mapping training.
class DivergenceError : public Error
{
public:
    DivergenceError(const std::string& what, std::size_t epoch) : Error(what), epoch_(epoch) {}
    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

} // namespace dtbeam
