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
#include "dtbeam/codebook.hpp"
#include "dtbeam/detail/text.hpp"
#include "dtbeam/error.hpp"
#include "dtbeam/io.hpp"
#include "dtbeam/scene.hpp"

#include <cmath>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dtbeam
{

enum class Split
{
    Train,
    Calibration,
    Test
};

inline std::string to_string(Split s)
{
    switch (s)
    {
    case Split::Train:
        return "train";
    case Split::Calibration:
        return "calibration";
    case Split::Test:
        return "test";
    }
    return "test";
}

inline Split split_from_string(const std::string& s)
{
    if (s == "train")
        return Split::Train;
    if (s == "calibration")
        return Split::Calibration;
    if (s == "test")
        return Split::Test;
    throw FormatError("unknown split '" + s + "'");
}

struct SampleRecord
{
    std::string sample_id;
    std::string scenario_id;
    MeasurementVector measurements;
    double ue_lat = 0.0;
    double ue_lon = 0.0;
    std::string scene_ref;                // relative to the manifest directory
    std::optional<std::string> image_ref; // only used by the vision front end
    Split split = Split::Test;

    bool operator==(const SampleRecord&) const = default;
};

struct ScenarioInfo
{
    std::string id;
    bool seen = true;

    bool operator==(const ScenarioInfo&) const = default;
};

enum class PowerUnit
{
    Linear,
    Db
};

struct Dataset
{
    std::vector<SampleRecord> samples;
    GeoReference georef;
    std::string codebook_ref;                  // L2 codebook CSV
    std::optional<std::string> codebook_l1_ref; // absent: synthesized 6-beam L1 codebook
    std::vector<ScenarioInfo> scenarios;
    std::string samples_ref = "samples.csv";
    PowerUnit power_unit = PowerUnit::Linear; // unit of the powers in the samples file
    std::optional<double> wavelength_m;
    std::filesystem::path base_dir; // directory of the manifest; not serialized

    std::filesystem::path resolve(const std::string& ref) const
    {
        const std::filesystem::path p(ref);
        return p.is_absolute() ? p : base_dir / p;
    }

    std::vector<const SampleRecord*> select(std::optional<Split> split) const
    {
        std::vector<const SampleRecord*> out;
        for (const auto& s : samples)
            if (!split || s.split == *split)
                out.push_back(&s);
        return out;
    }

    const ScenarioInfo* scenario(const std::string& id) const
    {
        for (const auto& s : scenarios)
            if (s.id == id)
                return &s;
        return nullptr;
    }
};

inline constexpr int samples_format_version = 1;
inline constexpr int manifest_format_version = 1;

namespace detail
{

inline const std::vector<std::string>& fixed_sample_columns()
{
    static const std::vector<std::string> cols{"sample_id", "scenario_id", "ue_lat", "ue_lon", "scene_ref", "image_ref"};
    return cols;
}

} // namespace detail

// Samples CSV: a "# dtbeam-samples v1" line, a column header row
// (sample_id,scenario_id,ue_lat,ue_lon,scene_ref,image_ref,p0..pN-1), then one
// row per sample. Splits live in the manifest. Row problems are collected and
// reported together.
inline std::vector<SampleRecord> parse_samples_csv(std::istream& in, PowerUnit unit = PowerUnit::Linear)
{
    std::string line;
    std::size_t line_no = 0;
    bool version_seen = false;
    std::vector<std::string> header;
    while (std::getline(in, line))
    {
        ++line_no;
        const auto t = detail::trim(line);
        if (t.empty())
            continue;
        if (t.front() == '#')
        {
            if (t.find("dtbeam-samples") != std::string_view::npos)
            {
                if (t.find("v" + std::to_string(samples_format_version)) == std::string_view::npos)
                    throw FormatError("samples: unsupported format version", line_no);
                version_seen = true;
            }
            continue;
        }
        for (auto c : detail::split(t))
            header.emplace_back(detail::trim(c));
        break;
    }
    if (!version_seen)
        throw FormatError("samples: missing '# dtbeam-samples v1' header line");
    const auto& fixed = detail::fixed_sample_columns();
    if (header.size() <= fixed.size())
        throw FormatError("samples: header has no power columns", line_no);
    for (std::size_t c = 0; c < fixed.size(); ++c)
        if (header[c] != fixed[c])
            throw FormatError("samples: column " + std::to_string(c) + " must be '" + fixed[c] + "'", line_no);
    const std::size_t n_powers = header.size() - fixed.size();
    for (std::size_t k = 0; k < n_powers; ++k)
        if (header[fixed.size() + k] != "p" + std::to_string(k))
            throw FormatError("samples: power column " + std::to_string(k) + " must be named p" + std::to_string(k),
                              line_no);

    std::vector<SampleRecord> out;
    std::vector<std::string> errors;
    std::set<std::string> ids;
    auto fail = [&](std::size_t row, const std::string& msg) {
        errors.push_back("row " + std::to_string(row) + ": " + msg);
    };
    while (std::getline(in, line))
    {
        ++line_no;
        const auto t = detail::trim(line);
        if (t.empty() || t.front() == '#')
            continue;
        const auto cells = detail::split(t);
        if (cells.size() != header.size())
        {
            fail(line_no, "expected " + std::to_string(header.size()) + " columns (" + std::to_string(n_powers) +
                              " powers), found " + std::to_string(cells.size()));
            continue;
        }
        SampleRecord r;
        r.sample_id = std::string(detail::trim(cells[0]));
        r.scenario_id = std::string(detail::trim(cells[1]));
        const auto lat = detail::parse_double(cells[2]);
        const auto lon = detail::parse_double(cells[3]);
        r.scene_ref = std::string(detail::trim(cells[4]));
        const auto image = detail::trim(cells[5]);
        if (!image.empty())
            r.image_ref = std::string(image);
        bool ok = true;
        if (r.sample_id.empty())
            fail(line_no, "empty sample_id"), ok = false;
        else if (!ids.insert(r.sample_id).second)
            fail(line_no, "duplicate sample_id '" + r.sample_id + "'"), ok = false;
        if (!lat || !lon || !(*lat >= -90.0 && *lat <= 90.0) || !(*lon >= -180.0 && *lon <= 180.0))
            fail(line_no, "invalid ue_lat/ue_lon"), ok = false;
        std::vector<double> powers(n_powers);
        for (std::size_t k = 0; k < n_powers && ok; ++k)
        {
            const auto v = detail::parse_double(cells[fixed.size() + k]);
            if (!v || !std::isfinite(*v))
            {
                fail(line_no, "power p" + std::to_string(k) + " is not numeric");
                ok = false;
                break;
            }
            powers[k] = unit == PowerUnit::Db ? std::pow(10.0, *v / 10.0) : *v;
            if (powers[k] < 0.0)
            {
                fail(line_no, "power p" + std::to_string(k) + " is negative");
                ok = false;
            }
        }
        if (!ok)
            continue;
        r.ue_lat = *lat;
        r.ue_lon = *lon;
        r.measurements = MeasurementVector(std::move(powers));
        out.push_back(std::move(r));
    }
    if (!errors.empty())
    {
        std::string msg = "samples: " + std::to_string(errors.size()) + " invalid row(s): " + errors.front();
        for (std::size_t i = 1; i < errors.size() && i < 5; ++i)
            msg += "; " + errors[i];
        throw FormatError(msg);
    }
    return out;
}

inline std::string samples_to_csv(const std::vector<SampleRecord>& samples)
{
    if (samples.empty())
        throw DataError("samples_to_csv: no samples");
    const std::size_t n_powers = samples.front().measurements.size();
    std::string out = "# dtbeam-samples v" + std::to_string(samples_format_version) + "\n";
    for (const auto& c : detail::fixed_sample_columns())
        out += c + ",";
    for (std::size_t k = 0; k < n_powers; ++k)
        out += "p" + std::to_string(k) + (k + 1 < n_powers ? "," : "\n");
    for (const auto& s : samples)
    {
        if (s.measurements.size() != n_powers)
            throw DataError("samples_to_csv: inconsistent measurement lengths");
        out += s.sample_id + "," + s.scenario_id + "," + detail::format_double(s.ue_lat) + "," +
               detail::format_double(s.ue_lon) + "," + s.scene_ref + "," + s.image_ref.value_or("") + ",";
        out += detail::join({s.measurements.powers().begin(), s.measurements.powers().end()}) + "\n";
    }
    return out;
}

inline json manifest_to_json(const Dataset& d)
{
    json splits = json::object();
    for (auto s : {Split::Train, Split::Calibration, Split::Test})
    {
        json ids = json::array();
        for (const auto& r : d.samples)
            if (r.split == s)
                ids.push_back(r.sample_id);
        if (!ids.empty())
            splits[to_string(s)] = ids;
    }
    json scenarios = json::array();
    for (const auto& s : d.scenarios)
        scenarios.push_back(json{{"id", s.id}, {"seen", s.seen}});
    json j{{"format", "dtbeam-manifest"},
           {"version", manifest_format_version},
           {"samples", d.samples_ref},
           {"codebook", d.codebook_ref},
           {"power_unit", d.power_unit == PowerUnit::Db ? "db" : "linear"},
           {"georef", georef_to_json(d.georef)},
           {"scenarios", scenarios},
           {"splits", splits}};
    if (d.codebook_l1_ref)
        j["codebook_l1"] = *d.codebook_l1_ref;
    if (d.wavelength_m)
        j["wavelength_m"] = *d.wavelength_m;
    return j;
}

// Reads the manifest, then the samples CSV it names, and assigns splits.
inline Dataset load_dataset(const std::filesystem::path& manifest_path)
{
    const json j = parse_json_file(manifest_path);
    Dataset d;
    d.base_dir = manifest_path.parent_path();
    std::map<std::string, Split> split_of;
    try
    {
        if (j.value("format", std::string()) != "dtbeam-manifest")
            throw FormatError("manifest: 'format' must be \"dtbeam-manifest\"");
        if (j.at("version").get<int>() != manifest_format_version)
            throw FormatError("manifest: unsupported version " + std::to_string(j.at("version").get<int>()));
        d.samples_ref = j.at("samples").get<std::string>();
        d.codebook_ref = j.at("codebook").get<std::string>();
        if (j.contains("codebook_l1"))
            d.codebook_l1_ref = j.at("codebook_l1").get<std::string>();
        const auto unit = j.value("power_unit", std::string("linear"));
        if (unit != "linear" && unit != "db")
            throw FormatError("manifest: power_unit must be 'linear' or 'db'");
        d.power_unit = unit == "db" ? PowerUnit::Db : PowerUnit::Linear;
        d.georef = georef_from_json(j.at("georef"));
        if (j.contains("wavelength_m"))
            d.wavelength_m = j.at("wavelength_m").get<double>();
        for (const auto& s : j.at("scenarios"))
            d.scenarios.push_back({s.at("id").get<std::string>(), s.value("seen", true)});
        for (const auto& [name, ids] : j.at("splits").items())
        {
            const auto split = split_from_string(name);
            for (const auto& id : ids)
                if (!split_of.emplace(id.get<std::string>(), split).second)
                    throw FormatError("manifest: sample '" + id.get<std::string>() + "' listed in two splits");
        }
    }
    catch (const json::exception& e)
    {
        throw FormatError(manifest_path.string() + ": " + e.what());
    }

    auto in = detail::open_input(d.resolve(d.samples_ref));
    d.samples = parse_samples_csv(in, d.power_unit);
    std::vector<std::string> errors;
    for (auto& s : d.samples)
    {
        const auto it = split_of.find(s.sample_id);
        if (it == split_of.end())
            errors.push_back("sample '" + s.sample_id + "' has no split");
        else
            s.split = it->second;
        if (!d.scenario(s.scenario_id))
            errors.push_back("sample '" + s.sample_id + "' references unknown scenario '" + s.scenario_id + "'");
        if (s.measurements.size() != d.samples.front().measurements.size())
            errors.push_back("sample '" + s.sample_id + "' has an inconsistent number of powers");
    }
    if (split_of.size() != d.samples.size() && errors.empty())
        errors.push_back("manifest lists sample ids that are not in the samples file");
    if (!errors.empty())
        throw FormatError("dataset: " + errors.front() +
                          (errors.size() > 1 ? " (+" + std::to_string(errors.size() - 1) + " more)" : ""));
    return d;
}

// Writes the manifest and samples CSV. Codebooks and scenes are written by
// their own savers.
inline void save_dataset(const Dataset& d, const std::filesystem::path& manifest_path)
{
    Dataset copy = d;
    copy.base_dir = manifest_path.parent_path();
    copy.power_unit = PowerUnit::Linear; // powers are held in linear scale in memory
    detail::write_atomic(copy.resolve(copy.samples_ref), samples_to_csv(copy.samples));
    detail::write_atomic(manifest_path, manifest_to_json(copy).dump(2) + "\n");
}

inline Codebook load_dataset_l2_codebook(const Dataset& d, const AngularGrid& grid = AngularGrid{})
{
    return load_codebook(d.resolve(d.codebook_ref), grid, CodebookLevel::L2);
}

inline Codebook load_dataset_l1_codebook(const Dataset& d, const AngularGrid& grid = AngularGrid{})
{
    if (d.codebook_l1_ref)
        return load_codebook(d.resolve(*d.codebook_l1_ref), grid, CodebookLevel::L1);
    return default_l1_codebook(grid);
}

} // namespace dtbeam
