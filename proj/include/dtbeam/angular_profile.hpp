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

#include "dtbeam/codebook.hpp"
#include "dtbeam/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

namespace dtbeam
{

// Received power (linear scale) per azimuth bin. Always nonnegative and finite.
class AngularPowerProfile
{
public:
    AngularPowerProfile() = default;

    explicit AngularPowerProfile(std::vector<double> values) : values_(std::move(values))
    {
        for (std::size_t j = 0; j < values_.size(); ++j)
            if (!std::isfinite(values_[j]) || values_[j] < 0.0)
                throw ConfigError("AngularPowerProfile: value at bin " + std::to_string(j) +
                                  " is negative or non-finite");
    }

    static AngularPowerProfile zeros(std::size_t n) { return AngularPowerProfile(std::vector<double>(n, 0.0)); }

    std::size_t size() const noexcept { return values_.size(); }
    double operator[](std::size_t j) const { return values_[j]; }
    std::span<const double> values() const noexcept { return values_; }
    const std::vector<double>& vector() const noexcept { return values_; }

    double total() const noexcept { return std::accumulate(values_.begin(), values_.end(), 0.0); }
    double peak() const noexcept { return values_.empty() ? 0.0 : *std::max_element(values_.begin(), values_.end()); }

    bool operator==(const AngularPowerProfile&) const = default;

private:
    std::vector<double> values_;
};

// Linear received power per L2 beam.
class MeasurementVector
{
public:
    MeasurementVector() = default;

    explicit MeasurementVector(std::vector<double> powers) : powers_(std::move(powers))
    {
        for (std::size_t k = 0; k < powers_.size(); ++k)
            if (!std::isfinite(powers_[k]) || powers_[k] < 0.0)
                throw ConfigError("MeasurementVector: power of beam " + std::to_string(k) +
                                  " is negative or non-finite");
    }

    std::size_t size() const noexcept { return powers_.size(); }
    double operator[](std::size_t k) const { return powers_[k]; }
    std::span<const double> powers() const noexcept { return powers_; }

    bool operator==(const MeasurementVector&) const = default;

private:
    std::vector<double> powers_;
};

// Indices of the k largest values, largest first; equal values keep the
// lower index first.
inline std::vector<int> rank_descending(std::span<const double> values, std::size_t k)
{
    if (k == 0 || k > values.size())
        throw ConfigError("rank_descending: k=" + std::to_string(k) + " outside [1, " +
                          std::to_string(values.size()) + "]");
    std::vector<int> idx(values.size());
    std::iota(idx.begin(), idx.end(), 0);
    auto before = [&](int a, int b) {
        if (values[a] != values[b])
            return values[a] > values[b];
        return a < b;
    };
    std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), before);
    idx.resize(k);
    return idx;
}

inline std::size_t argmax_lowest(std::span<const double> values)
{
    if (values.empty())
        throw DataError("argmax of an empty sequence");
    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] > values[best])
            best = i;
    return best;
}

// |sum over the top-k measured beams of y_k * b_k|.
inline AngularPowerProfile reconstruct_profile(const MeasurementVector& measurements, const Codebook& codebook,
                                               std::size_t k = 16)
{
    if (k == 0)
        throw ConfigError("reconstruct_profile: k must be >= 1");
    if (measurements.size() != codebook.size())
        throw ConfigError("reconstruct_profile: " + std::to_string(measurements.size()) +
                          " measurements for a codebook of " + std::to_string(codebook.size()) + " beams");
    if (k > codebook.size())
        throw ConfigError("reconstruct_profile: k exceeds codebook size");

    std::vector<double> acc(codebook.grid.size(), 0.0);
    for (int beam : rank_descending(measurements.powers(), k))
    {
        const double y = measurements[static_cast<std::size_t>(beam)];
        const auto& gains = codebook.beams[static_cast<std::size_t>(beam)].gains;
        for (std::size_t j = 0; j < acc.size(); ++j)
            acc[j] += y * gains[j];
    }
    for (auto& v : acc)
        v = std::abs(v);
    return AngularPowerProfile(std::move(acc));
}

// Inner product b^T r: the power a beam would receive from the profile.
inline double simulate_beam_power(const AngularPowerProfile& profile, const BeamProfile& beam)
{
    if (profile.size() != beam.gains.size())
        throw ConfigError("simulate_beam_power: profile has " + std::to_string(profile.size()) +
                          " bins, beam has " + std::to_string(beam.gains.size()));
    double acc = 0.0;
    for (std::size_t j = 0; j < beam.gains.size(); ++j)
        acc += beam.gains[j] * profile[j];
    return acc;
}

inline std::vector<double> simulate_beam_powers(const AngularPowerProfile& profile, const Codebook& codebook)
{
    std::vector<double> out(codebook.size());
    for (std::size_t k = 0; k < codebook.size(); ++k)
        out[k] = simulate_beam_power(profile, codebook.beams[k]);
    return out;
}

inline MeasurementVector measure(const AngularPowerProfile& profile, const Codebook& codebook)
{
    return MeasurementVector(simulate_beam_powers(profile, codebook));
}

// Beam indices ordered by descending simulated power, exactly k long.
inline std::vector<int> top_k_beams(const AngularPowerProfile& profile, const Codebook& codebook, std::size_t k)
{
    if (k == 0 || k > codebook.size())
        throw ConfigError("top_k_beams: k=" + std::to_string(k) + " outside [1, " +
                          std::to_string(codebook.size()) + "]");
    const auto powers = simulate_beam_powers(profile, codebook);
    return rank_descending(powers, k);
}

} // namespace dtbeam
