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

#include "dtbeam/error.hpp"

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

namespace dtbeam
{

// Uniform 1-degree azimuth grid. Bin j sits at first_deg + j; the default
// covers [-90, +89] with 180 bins, 0 degrees being the camera optical axis.
class AngularGrid
{
public:
    static constexpr std::size_t default_size = 180;

    AngularGrid() = default;

    explicit AngularGrid(std::size_t n_angles, double first_deg = -90.0) : n_angles_(n_angles), first_deg_(first_deg)
    {
        if (n_angles_ == 0)
            throw ConfigError("AngularGrid: n_angles must be positive");
        if (!std::isfinite(first_deg_))
            throw ConfigError("AngularGrid: first angle must be finite");
    }

    std::size_t size() const noexcept { return n_angles_; }
    double first_deg() const noexcept { return first_deg_; }
    double last_deg() const noexcept { return first_deg_ + static_cast<double>(n_angles_ - 1); }

    double angle(std::size_t j) const noexcept { return first_deg_ + static_cast<double>(j); }

    std::vector<double> angles() const
    {
        std::vector<double> out(n_angles_);
        for (std::size_t j = 0; j < n_angles_; ++j)
            out[j] = angle(j);
        return out;
    }

    // Nearest bin with half-up rounding (ties go toward +infinity).
    // Empty when the angle falls outside the grid.
    std::optional<std::size_t> nearest_bin(double deg) const noexcept
    {
        if (!std::isfinite(deg))
            return std::nullopt;
        const double pos = std::floor(deg - first_deg_ + 0.5);
        if (pos < 0.0 || pos >= static_cast<double>(n_angles_))
            return std::nullopt;
        return static_cast<std::size_t>(pos);
    }

    // Nearest bin, clamping out-of-span angles onto the grid endpoints.
    std::size_t clamped_bin(double deg) const noexcept
    {
        if (auto bin = nearest_bin(deg))
            return *bin;
        return deg < first_deg_ ? 0 : n_angles_ - 1;
    }

    bool contains(double deg) const noexcept { return deg >= first_deg_ && deg <= last_deg(); }

    bool operator==(const AngularGrid&) const = default;

private:
    std::size_t n_angles_ = default_size;
    double first_deg_ = -90.0;
};

} // namespace dtbeam
