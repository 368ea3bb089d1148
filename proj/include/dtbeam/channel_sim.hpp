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

#include "dtbeam/angular_profile.hpp"
#include "dtbeam/error.hpp"
#include "dtbeam/grid.hpp"
#include "dtbeam/scene.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

namespace dtbeam
{

struct SimConfig
{
    double wavelength_m = 0.005; // 60 GHz class; the carrier is a deployment input
    double alpha_hw_deg = 10.0;
    AngularGrid grid;
    double min_path_length_m = 0.1;
    bool exclude_ue_object = true;

    void validate() const
    {
        if (!(wavelength_m > 0.0) || !std::isfinite(wavelength_m))
            throw ConfigError("SimConfig: wavelength must be positive");
        if (!(alpha_hw_deg > 0.0) || !std::isfinite(alpha_hw_deg))
            throw ConfigError("SimConfig: alpha_hw must be positive");
        if (!(min_path_length_m > 0.0))
            throw ConfigError("SimConfig: min_path_length must be positive");
    }
};

enum class PathKind
{
    LoS,
    Reflection
};

struct PathImpulse
{
    double azimuth_deg = 0.0;
    double power = 0.0;
    PathKind kind = PathKind::LoS;
    std::string reflector_id; // empty for LoS
};

struct SimDiagnostics
{
    std::vector<std::string> dropped_out_of_grid; // "ue" or reflector ids
    std::vector<std::string> warnings;            // skipped degenerate paths
    double clamp_mass = 0.0;                      // sum of negative values clamped to zero
    double total_mass = 0.0;                      // profile mass after clamping
};

inline double free_space_gain(double path_length_m, double wavelength_m)
{
    const double a = wavelength_m / (4.0 * std::numbers::pi * path_length_m);
    return a * a;
}

// (lambda / (4 pi |p_ue|))^2
inline double pathloss_los(const Vec3& p_ue, double wavelength_m, double min_path_length_m = 0.1)
{
    const double d = p_ue.norm();
    if (!(d >= min_path_length_m))
        throw GeometryError("LoS path length " + std::to_string(d) + " m below minimum");
    return free_space_gain(d, wavelength_m);
}

// (lambda / (4 pi (|p_i - p_ue| + |p_i|)))^2
inline double pathloss_reflector(const Vec3& p_i, const Vec3& p_ue, double wavelength_m,
                                 double min_path_length_m = 0.1)
{
    const double d = (p_i - p_ue).norm() + p_i.norm();
    if (!(d >= min_path_length_m))
        throw GeometryError("reflection path length " + std::to_string(d) + " m below minimum");
    return free_space_gain(d, wavelength_m);
}

// LoS impulse plus one impulse per reflector. Degenerate paths are skipped and
// out-of-grid azimuths dropped; both are recorded in diag when given.
inline std::vector<PathImpulse> build_impulses(const Scene& scene, const SimConfig& cfg,
                                               SimDiagnostics* diag = nullptr)
{
    cfg.validate();
    std::vector<PathImpulse> out;
    auto warn = [&](std::string msg) {
        if (diag)
            diag->warnings.push_back(std::move(msg));
    };
    auto in_grid = [&](double az, const std::string& who) {
        if (cfg.grid.nearest_bin(az))
            return true;
        if (diag)
            diag->dropped_out_of_grid.push_back(who);
        return false;
    };

    try
    {
        const double az = azimuth_of(scene.ue_position);
        const double beta = pathloss_los(scene.ue_position, cfg.wavelength_m, cfg.min_path_length_m);
        if (in_grid(az, "ue"))
            out.push_back({az, beta, PathKind::LoS, {}});
    }
    catch (const GeometryError& e)
    {
        warn(std::string("ue: ") + e.what());
    }

    for (const auto& r : scene.reflectors)
    {
        if (cfg.exclude_ue_object && scene.ue_reflector_id && *scene.ue_reflector_id == r.id)
            continue;
        try
        {
            const double az = azimuth_of(r.position);
            const double beta = pathloss_reflector(r.position, scene.ue_position, cfg.wavelength_m,
                                                   cfg.min_path_length_m);
            if (in_grid(az, r.id))
                out.push_back({az, r.reflectance * beta, PathKind::Reflection, r.id});
        }
        catch (const GeometryError& e)
        {
            warn(r.id + ": " + e.what());
        }
    }
    return out;
}

// sin(pi x) with exact zeros at integers.
inline double sin_pi(double x)
{
    if (x == std::floor(x))
        return 0.0;
    const double r = x - 2.0 * std::round(0.5 * x); // r in [-1, 1]
    return std::sin(std::numbers::pi * r);
}

// Normalized sinc: sin(pi x) / (pi x), 1 at x = 0.
inline double sinc(double x)
{
    if (x == 0.0)
        return 1.0;
    return sin_pi(x) / (std::numbers::pi * x);
}

// s(d) = sinc(d / alpha_hw) at integer-degree offsets d = -(n-1) .. n-1.
// Index n-1 is the zero offset.
inline std::vector<double> sinc_kernel(const SimConfig& cfg)
{
    cfg.validate();
    const auto n = static_cast<long>(cfg.grid.size());
    std::vector<double> kernel(static_cast<std::size_t>(2 * n - 1));
    for (long d = -(n - 1); d <= n - 1; ++d)
        kernel[static_cast<std::size_t>(d + n - 1)] = sinc(static_cast<double>(d) / cfg.alpha_hw_deg);
    return kernel;
}

// Impulse powers summed per nearest grid bin.
inline std::vector<double> bin_impulses(const std::vector<PathImpulse>& impulses, const AngularGrid& grid)
{
    std::vector<double> bins(grid.size(), 0.0);
    for (const auto& imp : impulses)
        if (auto b = grid.nearest_bin(imp.azimuth_deg))
            bins[*b] += imp.power;
    return bins;
}

// Binned impulses convolved with the receiver's angular response, cropped to
// the grid. No clamping; sidelobe sums may be negative.
inline std::vector<double> convolve_raw(const std::vector<double>& bins, const std::vector<double>& kernel)
{
    const std::size_t n = bins.size();
    if (kernel.size() != 2 * n - 1)
        throw ConfigError("convolve: kernel length does not match grid");
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
    {
        if (bins[i] == 0.0)
            continue;
        // out[j] += bins[i] * s(j - i), kernel index (j - i) + n - 1
        const double* k = kernel.data() + (n - 1 - i);
        for (std::size_t j = 0; j < n; ++j)
            out[j] += bins[i] * k[j];
    }
    return out;
}

// Negative sidelobe sums are clamped to zero; the removed mass goes to diag.
inline AngularPowerProfile convolve_and_clamp(const std::vector<double>& bins, const std::vector<double>& kernel,
                                              SimDiagnostics* diag = nullptr)
{
    auto out = convolve_raw(bins, kernel);
    double clamped = 0.0;
    for (auto& v : out)
    {
        if (v < 0.0)
        {
            clamped -= v;
            v = 0.0;
        }
    }
    AngularPowerProfile profile(std::move(out));
    if (diag)
    {
        diag->clamp_mass += clamped;
        diag->total_mass += profile.total();
    }
    return profile;
}

inline AngularPowerProfile simulate_profile(const Scene& scene, const SimConfig& cfg, SimDiagnostics* diag = nullptr)
{
    const auto impulses = build_impulses(scene, cfg, diag);
    return convolve_and_clamp(bin_impulses(impulses, cfg.grid), sinc_kernel(cfg), diag);
}

} // namespace dtbeam
