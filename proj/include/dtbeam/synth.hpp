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
#include "dtbeam/channel_sim.hpp"
#include "dtbeam/codebook.hpp"
#include "dtbeam/dataset.hpp"
#include "dtbeam/error.hpp"
#include "dtbeam/io.hpp"
#include "dtbeam/scene.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace dtbeam
{

struct Interval
{
    double min = 0.0;
    double max = 0.0;
};

struct ScenarioSpec
{
    std::size_t n_reflectors = 0;
    Interval ue_range{5.0, 40.0};        // meters from the camera
    Interval azimuth_range{-50.0, 50.0}; // degrees
    Interval reflectance_range{0.2, 1.0};
    Interval reflector_range{3.0, 40.0};  // meters
    Interval reflector_height{-1.0, 1.0}; // camera-frame y, meters
    double noise_floor = 0.0;             // linear power
    std::uint64_t seed = 0;

    void validate(const AngularGrid& grid) const
    {
        auto ordered = [](const Interval& i) { return std::isfinite(i.min) && std::isfinite(i.max) && i.min <= i.max; };
        if (!ordered(ue_range) || !ordered(azimuth_range) || !ordered(reflectance_range) || !ordered(reflector_range) ||
            !ordered(reflector_height))
            throw ConfigError("ScenarioSpec: ranges must be finite and ordered");
        if (!(ue_range.min > 0.0) || !(reflector_range.min > 0.0))
            throw ConfigError("ScenarioSpec: distances must be positive");
        if (!grid.contains(azimuth_range.min) || !grid.contains(azimuth_range.max))
            throw ConfigError("ScenarioSpec: azimuth range must lie inside the angular grid");
        if (reflectance_range.min < 0.0 || reflectance_range.max > 1.0)
            throw ConfigError("ScenarioSpec: reflectance range must lie inside [0, 1]");
        if (!(noise_floor >= 0.0))
            throw ConfigError("ScenarioSpec: noise floor must be nonnegative");
    }
};

struct ScenarioSample
{
    Scene scene;
    AngularPowerProfile gt_profile;
    MeasurementVector measurements;
};

// splitmix64 finalizer; derives independent per-sample seeds from a base seed.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t index)
{
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline Vec3 polar_to_camera(double range_m, double azimuth_deg, double y = 0.0)
{
    const double a = azimuth_deg * std::numbers::pi / 180.0;
    return {range_m * std::sin(a), y, range_m * std::cos(a)};
}

// Samples a scene, simulates its profile and measures it with the L2 codebook.
// measurements_k = b_k^T gt + noise_floor * u_k, u_k ~ U[0, 1].
inline ScenarioSample generate_scenario(const ScenarioSpec& spec, const Codebook& l2, const SimConfig& cfg)
{
    spec.validate(cfg.grid);
    std::mt19937_64 rng(spec.seed);
    auto uniform = [&rng](const Interval& i) {
        return i.min == i.max ? i.min : std::uniform_real_distribution<double>(i.min, i.max)(rng);
    };
    static const std::array<const char*, 3> classes{"car", "tree", "pole"};

    ScenarioSample out;
    const double ue_r = uniform(spec.ue_range);
    const double ue_az = uniform(spec.azimuth_range);
    out.scene.ue_position = polar_to_camera(ue_r, ue_az);
    for (std::size_t i = 0; i < spec.n_reflectors; ++i)
    {
        PointReflector r;
        r.id = "o" + std::to_string(i + 1);
        const double range = uniform(spec.reflector_range);
        const double az = uniform(spec.azimuth_range);
        const double y = uniform(spec.reflector_height);
        r.position = polar_to_camera(range, az, y);
        r.class_label = classes[i % classes.size()];
        r.reflectance = uniform(spec.reflectance_range);
        out.scene.reflectors.push_back(std::move(r));
    }
    out.gt_profile = simulate_profile(out.scene, cfg);
    auto powers = simulate_beam_powers(out.gt_profile, l2);
    if (spec.noise_floor > 0.0)
    {
        std::uniform_real_distribution<double> u(0.0, 1.0);
        for (auto& p : powers)
            p += spec.noise_floor * u(rng);
    }
    out.measurements = MeasurementVector(std::move(powers));
    return out;
}

// Fixed linear distortion A = diag(g) * shift + dense/n * U standing in for
// effects the simulator does not model (calibration offset, gain ripple,
// diffuse scattering).
struct DistortionSpec
{
    int shift_bins = 0;
    Interval gain{1.0, 1.0};
    double dense_level = 0.0;
    std::uint64_t seed = 0;
};

inline Eigen::MatrixXd make_distortion(const DistortionSpec& spec, std::size_t n)
{
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> g(spec.gain.min, spec.gain.max);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto ni = static_cast<Eigen::Index>(n);
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(ni, ni);
    for (Eigen::Index i = 0; i < ni; ++i)
    {
        const Eigen::Index src = i - spec.shift_bins;
        const double gain = spec.gain.min == spec.gain.max ? spec.gain.min : g(rng);
        if (src >= 0 && src < ni)
            a(i, src) = gain;
    }
    if (spec.dense_level > 0.0)
        for (Eigen::Index i = 0; i < ni; ++i)
            for (Eigen::Index j = 0; j < ni; ++j)
                a(i, j) += spec.dense_level / static_cast<double>(n) * u(rng);
    return a;
}

// Random distortion drawn from a seed: shift of 3..7 bins either way, gains in
// [0.5, 1.5], dense level 0.2.
inline DistortionSpec random_distortion(std::uint64_t seed)
{
    std::mt19937_64 rng(seed);
    DistortionSpec d;
    const int magnitude = std::uniform_int_distribution<int>(3, 7)(rng);
    d.shift_bins = std::uniform_int_distribution<int>(0, 1)(rng) ? magnitude : -magnitude;
    d.gain = {0.5, 1.5};
    d.dense_level = 0.2;
    d.seed = rng();
    return d;
}

// clamp(A r, 0)
inline AngularPowerProfile distort_profile(const Eigen::MatrixXd& a, const AngularPowerProfile& profile)
{
    if (static_cast<std::size_t>(a.cols()) != profile.size())
        throw ConfigError("distort_profile: dimension mismatch");
    const Eigen::Map<const Eigen::VectorXd> r(profile.values().data(), static_cast<Eigen::Index>(profile.size()));
    const Eigen::VectorXd v = a * r;
    std::vector<double> out(profile.size());
    for (std::size_t j = 0; j < out.size(); ++j)
        out[j] = std::max(0.0, v(static_cast<Eigen::Index>(j)));
    return AngularPowerProfile(std::move(out));
}

// --------------------------------------------------------- whole datasets

struct SynthScenario
{
    std::string id;
    bool seen = true;
    std::size_t n_samples = 0;
    ScenarioSpec spec; // spec.seed is the base seed for the scenario's samples
};

struct SynthDatasetSpec
{
    std::vector<SynthScenario> scenarios;
    double calibration_fraction = 0.5; // leading share of each scenario's samples
    GeoReference georef{40.0, -111.9, 0.0, std::nullopt};
    SimConfig sim;
    std::optional<DistortionSpec> distortion; // applied to ground truth only
};

struct SynthDataset
{
    Dataset dataset;
    std::vector<Scene> scenes;                   // aligned with dataset.samples
    std::vector<AngularPowerProfile> gt_profiles; // aligned with dataset.samples
    Codebook l1;
    Codebook l2;
};

inline SynthDataset generate_dataset(const SynthDatasetSpec& spec)
{
    if (spec.scenarios.empty())
        throw ConfigError("synth: no scenarios");
    if (!(spec.calibration_fraction >= 0.0 && spec.calibration_fraction <= 1.0))
        throw ConfigError("synth: calibration_fraction must lie in [0, 1]");
    spec.sim.validate();
    spec.georef.validate();

    SynthDataset out;
    out.l2 = default_l2_codebook(spec.sim.grid);
    out.l1 = default_l1_codebook(spec.sim.grid);
    Dataset& d = out.dataset;
    d.georef = spec.georef;
    d.codebook_ref = "codebook_l2.csv";
    d.codebook_l1_ref = "codebook_l1.csv";
    d.wavelength_m = spec.sim.wavelength_m;

    std::optional<Eigen::MatrixXd> distortion;
    if (spec.distortion)
        distortion = make_distortion(*spec.distortion, spec.sim.grid.size());

    for (const auto& sc : spec.scenarios)
    {
        if (sc.id.empty() || d.scenario(sc.id))
            throw ConfigError("synth: scenario ids must be unique and non-empty");
        d.scenarios.push_back({sc.id, sc.seen});
        const auto n_cal = static_cast<std::size_t>(std::floor(spec.calibration_fraction * static_cast<double>(sc.n_samples)));
        for (std::size_t i = 0; i < sc.n_samples; ++i)
        {
            ScenarioSpec s = sc.spec;
            s.seed = mix_seed(sc.spec.seed, i);
            auto sample = generate_scenario(s, out.l2, spec.sim);
            if (distortion)
            {
                sample.gt_profile = distort_profile(*distortion, sample.gt_profile);
                auto powers = simulate_beam_powers(sample.gt_profile, out.l2);
                if (s.noise_floor > 0.0)
                {
                    std::mt19937_64 rng(mix_seed(s.seed, 0xD157));
                    std::uniform_real_distribution<double> u(0.0, 1.0);
                    for (auto& p : powers)
                        p += s.noise_floor * u(rng);
                }
                sample.measurements = MeasurementVector(std::move(powers));
            }

            char idx[16];
            std::snprintf(idx, sizeof(idx), "%05zu", i);
            SampleRecord r;
            r.sample_id = sc.id + "_" + idx;
            r.scenario_id = sc.id;
            r.measurements = sample.measurements;
            const auto ll = camera_frame_to_gps(sample.scene.ue_position, spec.georef);
            r.ue_lat = ll.lat;
            r.ue_lon = ll.lon;
            r.scene_ref = "scenes/" + r.sample_id + ".json";
            r.split = i < n_cal ? Split::Calibration : Split::Test;
            d.samples.push_back(std::move(r));
            out.scenes.push_back(std::move(sample.scene));
            out.gt_profiles.push_back(std::move(sample.gt_profile));
        }
    }
    return out;
}

// ------------------------------------------------------------ spec JSON
//
// {
//   "calibration_fraction": 0.5,
//   "georef": {"origin_lat": .., "origin_lon": .., "camera_yaw_deg": ..},
//   "sim": {"wavelength_m": .., "alpha_hw_deg": .., "min_path_length_m": .., "exclude_ue_object": ..},
//   "distortion": {"shift_bins": .., "gain": [lo, hi], "dense_level": .., "seed": ..} | {"random_seed": ..},
//   "scenarios": [{"id": "31", "seen": false, "n_samples": 200, "seed": 1, "n_reflectors": 0,
//                  "ue_range": [lo, hi], "azimuth_range": [..], "reflectance_range": [..],
//                  "reflector_range": [..], "reflector_height": [..], "noise_floor": 0}]
// }
//
// Everything except scenarios[].id and scenarios[].n_samples is optional.

namespace detail
{

inline Interval interval_from_json(const json& j, const Interval& fallback)
{
    if (j.is_null())
        return fallback;
    if (!j.is_array() || j.size() != 2)
        throw FormatError("synth spec: ranges are [min, max] arrays");
    return {j.at(0).get<double>(), j.at(1).get<double>()};
}

inline json interval_to_json(const Interval& i) { return json::array({i.min, i.max}); }

inline json value_or_null(const json& j, const char* key) { return j.contains(key) ? j.at(key) : json(); }

} // namespace detail

inline SynthDatasetSpec synth_spec_from_json(const json& j)
{
    SynthDatasetSpec spec;
    try
    {
        if (!j.is_object())
            throw FormatError("synth spec: top level must be an object");
        for (const auto& [key, _] : j.items())
            if (key != "calibration_fraction" && key != "georef" && key != "sim" && key != "distortion" &&
                key != "scenarios" && key != "format_version")
                throw FormatError("synth spec: unknown key '" + key + "'");
        spec.calibration_fraction = j.value("calibration_fraction", spec.calibration_fraction);
        if (j.contains("georef"))
            spec.georef = georef_from_json(j.at("georef"));
        if (j.contains("sim"))
        {
            const auto& s = j.at("sim");
            spec.sim.wavelength_m = s.value("wavelength_m", spec.sim.wavelength_m);
            spec.sim.alpha_hw_deg = s.value("alpha_hw_deg", spec.sim.alpha_hw_deg);
            spec.sim.min_path_length_m = s.value("min_path_length_m", spec.sim.min_path_length_m);
            spec.sim.exclude_ue_object = s.value("exclude_ue_object", spec.sim.exclude_ue_object);
        }
        if (j.contains("distortion") && !j.at("distortion").is_null())
        {
            const auto& d = j.at("distortion");
            if (d.contains("random_seed"))
            {
                spec.distortion = random_distortion(d.at("random_seed").get<std::uint64_t>());
            }
            else
            {
                DistortionSpec ds;
                ds.shift_bins = d.value("shift_bins", 0);
                ds.gain = detail::interval_from_json(detail::value_or_null(d, "gain"), ds.gain);
                ds.dense_level = d.value("dense_level", 0.0);
                ds.seed = d.value("seed", std::uint64_t{0});
                spec.distortion = ds;
            }
        }
        for (const auto& sj : j.at("scenarios"))
        {
            SynthScenario sc;
            sc.id = sj.at("id").get<std::string>();
            sc.seen = sj.value("seen", true);
            if (!sj.at("n_samples").is_number_unsigned())
                throw FormatError("synth spec: n_samples must be a nonnegative integer");
            sc.n_samples = sj.at("n_samples").get<std::size_t>();
            auto& s = sc.spec;
            s.seed = sj.value("seed", std::uint64_t{0});
            s.n_reflectors = sj.value("n_reflectors", std::size_t{0});
            s.ue_range = detail::interval_from_json(detail::value_or_null(sj, "ue_range"), s.ue_range);
            s.azimuth_range = detail::interval_from_json(detail::value_or_null(sj, "azimuth_range"), s.azimuth_range);
            s.reflectance_range =
                detail::interval_from_json(detail::value_or_null(sj, "reflectance_range"), s.reflectance_range);
            s.reflector_range =
                detail::interval_from_json(detail::value_or_null(sj, "reflector_range"), s.reflector_range);
            s.reflector_height =
                detail::interval_from_json(detail::value_or_null(sj, "reflector_height"), s.reflector_height);
            s.noise_floor = sj.value("noise_floor", 0.0);
            spec.scenarios.push_back(std::move(sc));
        }
    }
    catch (const json::exception& e)
    {
        throw FormatError(std::string("synth spec: ") + e.what());
    }
    return spec;
}

inline json synth_spec_to_json(const SynthDatasetSpec& spec)
{
    json scenarios = json::array();
    for (const auto& sc : spec.scenarios)
    {
        const auto& s = sc.spec;
        scenarios.push_back({{"id", sc.id},
                             {"seen", sc.seen},
                             {"n_samples", sc.n_samples},
                             {"seed", s.seed},
                             {"n_reflectors", s.n_reflectors},
                             {"ue_range", detail::interval_to_json(s.ue_range)},
                             {"azimuth_range", detail::interval_to_json(s.azimuth_range)},
                             {"reflectance_range", detail::interval_to_json(s.reflectance_range)},
                             {"reflector_range", detail::interval_to_json(s.reflector_range)},
                             {"reflector_height", detail::interval_to_json(s.reflector_height)},
                             {"noise_floor", s.noise_floor}});
    }
    json j{{"calibration_fraction", spec.calibration_fraction},
           {"georef", georef_to_json(spec.georef)},
           {"sim",
            {{"wavelength_m", spec.sim.wavelength_m},
             {"alpha_hw_deg", spec.sim.alpha_hw_deg},
             {"min_path_length_m", spec.sim.min_path_length_m},
             {"exclude_ue_object", spec.sim.exclude_ue_object}}},
           {"scenarios", std::move(scenarios)}};
    if (spec.distortion)
    {
        const auto& d = *spec.distortion;
        j["distortion"] = {{"shift_bins", d.shift_bins},
                           {"gain", detail::interval_to_json(d.gain)},
                           {"dense_level", d.dense_level},
                           {"seed", d.seed}};
    }
    return j;
}

// Writes manifest.json, samples.csv, both codebooks, one scene JSON per sample
// and gt_profiles.csv (rows aligned with samples.csv) into dir.
inline std::filesystem::path write_synth_dataset(const SynthDataset& s, const std::filesystem::path& dir)
{
    const auto manifest = dir / "manifest.json";
    Dataset d = s.dataset;
    d.base_dir = dir;
    for (std::size_t i = 0; i < d.samples.size(); ++i)
        save_scene(s.scenes[i], d.resolve(d.samples[i].scene_ref), s.l2.grid.size(), d.georef);
    detail::write_atomic(d.resolve(d.codebook_ref), codebook_to_csv(s.l2));
    detail::write_atomic(d.resolve(*d.codebook_l1_ref), codebook_to_csv(s.l1));
    save_profiles(s.gt_profiles, dir / "gt_profiles.csv", "ground-truth profiles, rows aligned with samples.csv");
    save_dataset(d, manifest);
    return manifest;
}

} // namespace dtbeam
