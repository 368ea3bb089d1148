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

#include "dtbeam/detail/text.hpp"
#include "dtbeam/error.hpp"
#include "dtbeam/grid.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <filesystem>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dtbeam
{

enum class CodebookLevel
{
    L1,
    L2
};

// Peak-normalized power gain of one beam sampled on the angular grid.
struct BeamProfile
{
    int beam_index = 0;
    std::vector<double> gains;
    double boresight_deg = 0.0;
};

struct Codebook
{
    CodebookLevel level = CodebookLevel::L2;
    AngularGrid grid;
    std::vector<BeamProfile> beams;
    double span_min_deg = 0.0;
    double span_max_deg = 0.0;

    std::size_t size() const noexcept { return beams.size(); }
    const BeamProfile& operator[](std::size_t k) const { return beams.at(k); }
};

namespace detail
{

// Scales gains so the maximum is exactly one and derives the boresight as
// the grid angle of the (first) maximum.
inline BeamProfile make_beam(int index, std::vector<double> gains, const AngularGrid& grid)
{
    const auto it = std::max_element(gains.begin(), gains.end());
    const double peak = *it;
    const auto peak_bin = static_cast<std::size_t>(it - gains.begin());
    if (!(peak > 0.0))
        throw ConfigError("beam " + std::to_string(index) + " has no positive gain");
    for (auto& g : gains)
        g /= peak;
    gains[peak_bin] = 1.0;
    return BeamProfile{index, std::move(gains), grid.angle(peak_bin)};
}

inline void fill_span(Codebook& cb)
{
    cb.span_min_deg = cb.beams.front().boresight_deg;
    cb.span_max_deg = cb.beams.front().boresight_deg;
    for (const auto& b : cb.beams)
    {
        cb.span_min_deg = std::min(cb.span_min_deg, b.boresight_deg);
        cb.span_max_deg = std::max(cb.span_max_deg, b.boresight_deg);
    }
}

} // namespace detail

// Power gain |a(alpha)^H w|^2 of a half-wavelength ULA whose unit-norm
// weight w is the steering vector at steer_deg.
inline double ula_power_gain(std::size_t n_elements, double alpha_deg, double steer_deg)
{
    constexpr double deg = std::numbers::pi / 180.0;
    const double phase = std::numbers::pi * (std::sin(alpha_deg * deg) - std::sin(steer_deg * deg));
    std::complex<double> acc{0.0, 0.0};
    for (std::size_t n = 0; n < n_elements; ++n)
        acc += std::polar(1.0, phase * static_cast<double>(n));
    return std::norm(acc) / static_cast<double>(n_elements);
}

// Uniformly steered ULA codebook. Steering angles are spaced evenly over
// [span_min, span_max] inclusive (a single beam points at the span centre).
inline Codebook synth_ula_codebook(std::size_t n_elements, std::size_t n_beams, double span_min_deg,
                                   double span_max_deg, const AngularGrid& grid = AngularGrid{},
                                   CodebookLevel level = CodebookLevel::L2)
{
    if (n_elements == 0)
        throw ConfigError("synth_ula_codebook: n_elements must be >= 1");
    if (n_beams == 0)
        throw ConfigError("synth_ula_codebook: n_beams must be >= 1");
    if (!(span_min_deg <= span_max_deg) || !grid.contains(span_min_deg) || !grid.contains(span_max_deg))
        throw ConfigError("synth_ula_codebook: span must be ordered and inside the angular grid");

    Codebook cb;
    cb.level = level;
    cb.grid = grid;
    cb.beams.reserve(n_beams);
    for (std::size_t k = 0; k < n_beams; ++k)
    {
        const double steer = n_beams == 1
                                 ? 0.5 * (span_min_deg + span_max_deg)
                                 : span_min_deg + (span_max_deg - span_min_deg) * static_cast<double>(k) /
                                                      static_cast<double>(n_beams - 1);
        std::vector<double> gains(grid.size());
        for (std::size_t j = 0; j < grid.size(); ++j)
            gains[j] = ula_power_gain(n_elements, grid.angle(j), steer);
        cb.beams.push_back(detail::make_beam(static_cast<int>(k), std::move(gains), grid));
    }
    detail::fill_span(cb);
    return cb;
}

// Paper-configuration codebooks: 64 narrow L2 beams from a 16-element ULA
// and 6 wide L1 beams over the same -50..50 degree span.
inline Codebook default_l2_codebook(const AngularGrid& grid = AngularGrid{})
{
    return synth_ula_codebook(16, 64, -50.0, 50.0, grid, CodebookLevel::L2);
}

inline Codebook default_l1_codebook(const AngularGrid& grid = AngularGrid{})
{
    return synth_ula_codebook(6, 6, -50.0, 50.0, grid, CodebookLevel::L1);
}

// Codebook CSV: one beam per row with grid.size() nonnegative gains;
// '#' lines are comments.
inline Codebook parse_codebook(std::istream& in, const AngularGrid& grid = AngularGrid{},
                               CodebookLevel level = CodebookLevel::L2)
{
    Codebook cb;
    cb.level = level;
    cb.grid = grid;
    for (const auto& line : detail::read_data_lines(in))
    {
        const auto cells = detail::split(line.text);
        if (cells.size() != grid.size())
            throw FormatError("codebook row has " + std::to_string(cells.size()) + " values, expected " +
                                  std::to_string(grid.size()),
                              line.line_no);
        std::vector<double> gains(cells.size());
        for (std::size_t j = 0; j < cells.size(); ++j)
        {
            const auto v = detail::parse_double(cells[j]);
            if (!v || !std::isfinite(*v))
                throw FormatError("codebook gain is not a finite number", line.line_no);
            if (*v < 0.0)
                throw FormatError("codebook gain is negative", line.line_no);
            gains[j] = *v;
        }
        if (std::all_of(gains.begin(), gains.end(), [](double g) { return g == 0.0; }))
            throw FormatError("codebook row is all zeros", line.line_no);
        cb.beams.push_back(detail::make_beam(static_cast<int>(cb.beams.size()), std::move(gains), grid));
    }
    if (cb.beams.empty())
        throw FormatError("codebook file contains no beams");
    detail::fill_span(cb);
    return cb;
}

inline Codebook load_codebook(const std::filesystem::path& path, const AngularGrid& grid = AngularGrid{},
                              CodebookLevel level = CodebookLevel::L2)
{
    auto in = detail::open_input(path);
    return parse_codebook(in, grid, level);
}

inline std::string codebook_to_csv(const Codebook& cb)
{
    std::string out = "# dtbeam codebook, one beam per row, gain at " + detail::format_double(cb.grid.first_deg()) +
                      ".." + detail::format_double(cb.grid.last_deg()) + " deg\n";
    for (const auto& b : cb.beams)
        out += detail::join(b.gains) + "\n";
    return out;
}

// For every L2 beam, the L1 beam with the largest gain at the L2 boresight.
// Ties go to the lower L1 index.
inline std::vector<int> map_l2_to_l1(const Codebook& l1, const Codebook& l2)
{
    if (l1.beams.empty() || l2.beams.empty())
        throw ConfigError("map_l2_to_l1: empty codebook");
    if (!(l1.grid == l2.grid))
        throw ConfigError("map_l2_to_l1: codebooks use different grids");
    std::vector<int> assignment(l2.size());
    for (std::size_t k = 0; k < l2.size(); ++k)
    {
        const auto bin = l2.grid.clamped_bin(l2.beams[k].boresight_deg);
        std::size_t best = 0;
        for (std::size_t j = 1; j < l1.size(); ++j)
            if (l1.beams[j].gains[bin] > l1.beams[best].gains[bin])
                best = j;
        assignment[k] = static_cast<int>(best);
    }
    return assignment;
}

} // namespace dtbeam
