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

#include "dtbeam/adaptation.hpp"
#include "dtbeam/angular_profile.hpp"
#include "dtbeam/detail/text.hpp"
#include "dtbeam/error.hpp"
#include "dtbeam/grid.hpp"
#include "dtbeam/scene.hpp"

#include <json.hpp>

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace dtbeam
{

using json = nlohmann::json;

// ---------------------------------------------------------------- scene JSON

inline json reflectance_table_to_json(const ReflectanceTable& t)
{
    return json{{"default", t.default_reflectance}, {"classes", t.by_class}};
}

inline ReflectanceTable reflectance_table_from_json(const json& j)
{
    ReflectanceTable t;
    t.by_class.clear();
    try
    {
        t.default_reflectance = j.value("default", 0.5);
        if (j.contains("classes"))
            for (const auto& [k, v] : j.at("classes").items())
                t.by_class[k] = v.get<double>();
    }
    catch (const json::exception& e)
    {
        throw FormatError(std::string("reflectance table: ") + e.what());
    }
    try
    {
        t.validate();
    }
    catch (const ConfigError& e)
    {
        throw FormatError(e.what());
    }
    return t;
}

inline json georef_to_json(const GeoReference& g)
{
    json j{{"origin_lat", g.origin_lat}, {"origin_lon", g.origin_lon}, {"camera_yaw_deg", g.camera_yaw_deg}};
    if (g.origin_altitude)
        j["origin_altitude"] = *g.origin_altitude;
    return j;
}

inline GeoReference georef_from_json(const json& j)
{
    GeoReference g;
    try
    {
        g.origin_lat = j.at("origin_lat").get<double>();
        g.origin_lon = j.at("origin_lon").get<double>();
        g.camera_yaw_deg = j.value("camera_yaw_deg", 0.0);
        if (j.contains("origin_altitude") && !j.at("origin_altitude").is_null())
            g.origin_altitude = j.at("origin_altitude").get<double>();
    }
    catch (const json::exception& e)
    {
        throw FormatError(std::string("georef: ") + e.what());
    }
    g.validate();
    return g;
}

namespace detail
{

inline void check_vec3(const json& j, const std::string& where, std::vector<std::string>& errors)
{
    if (!j.is_array() || j.size() != 3)
    {
        errors.push_back(where + ": expected an array of 3 numbers");
        return;
    }
    for (const auto& v : j)
        if (!v.is_number() || !std::isfinite(v.get<double>()))
            errors.push_back(where + ": components must be finite numbers");
}

inline Vec3 to_vec3(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

inline json from_vec3(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

} // namespace detail

// Structural check of a scene document. Returns one message per problem;
// an empty result means the document can be loaded.
inline std::vector<std::string> validate_scene_json(const json& j, std::size_t expected_n_angles = AngularGrid::default_size)
{
    std::vector<std::string> errors;
    if (!j.is_object())
        return {"scene: document must be a JSON object"};
    if (j.contains("grid_n_angles"))
    {
        const auto& g = j.at("grid_n_angles");
        if (!g.is_number_integer() || g.get<long long>() != static_cast<long long>(expected_n_angles))
            errors.push_back("grid_n_angles: expected " + std::to_string(expected_n_angles));
    }
    if (!j.contains("ue") || !j.at("ue").is_object() || !j.at("ue").contains("position"))
        errors.push_back("ue.position: missing");
    else
    {
        detail::check_vec3(j.at("ue").at("position"), "ue.position", errors);
        if (j.at("ue").contains("object_id") && !j.at("ue").at("object_id").is_string())
            errors.push_back("ue.object_id: must be a string");
    }
    if (!j.contains("objects") || !j.at("objects").is_array())
    {
        errors.push_back("objects: missing array");
        return errors;
    }
    std::set<std::string> ids;
    for (std::size_t i = 0; i < j.at("objects").size(); ++i)
    {
        const auto& o = j.at("objects")[i];
        const std::string where = "objects[" + std::to_string(i) + "]";
        if (!o.is_object())
        {
            errors.push_back(where + ": must be an object");
            continue;
        }
        if (!o.contains("id") || !o.at("id").is_string() || o.at("id").get<std::string>().empty())
            errors.push_back(where + ".id: missing or not a non-empty string");
        else if (!ids.insert(o.at("id").get<std::string>()).second)
            errors.push_back(where + ".id: duplicate '" + o.at("id").get<std::string>() + "'");
        if (o.contains("class") && !o.at("class").is_string())
            errors.push_back(where + ".class: must be a string");
        if (!o.contains("position"))
            errors.push_back(where + ".position: missing");
        else
            detail::check_vec3(o.at("position"), where + ".position", errors);
        if (o.contains("reflectance") && !o.at("reflectance").is_null())
        {
            const auto& r = o.at("reflectance");
            if (!r.is_number() || !(r.get<double>() >= 0.0 && r.get<double>() <= 1.0))
                errors.push_back(where + ".reflectance: must be a number in [0, 1]");
        }
    }
    return errors;
}

// Objects without a reflectance take the table value for their class.
inline Scene scene_from_json(const json& j, const ReflectanceTable& table = ReflectanceTable::standard(),
                             std::size_t expected_n_angles = AngularGrid::default_size)
{
    const auto errors = validate_scene_json(j, expected_n_angles);
    if (!errors.empty())
    {
        std::string msg = "invalid scene: " + errors.front();
        if (errors.size() > 1)
            msg += " (+" + std::to_string(errors.size() - 1) + " more)";
        throw FormatError(msg);
    }
    Scene s;
    s.ue_position = detail::to_vec3(j.at("ue").at("position"));
    if (j.at("ue").contains("object_id"))
        s.ue_reflector_id = j.at("ue").at("object_id").get<std::string>();
    for (const auto& o : j.at("objects"))
    {
        PointReflector r;
        r.id = o.at("id").get<std::string>();
        r.position = detail::to_vec3(o.at("position"));
        r.class_label = o.value("class", std::string("unknown"));
        if (o.contains("reflectance") && !o.at("reflectance").is_null())
            r.reflectance = o.at("reflectance").get<double>();
        else
            r.reflectance = reflectance_for_class(r.class_label, table);
        s.reflectors.push_back(std::move(r));
    }
    try
    {
        validate_scene(s);
    }
    catch (const ConfigError& e)
    {
        throw FormatError(e.what());
    }
    return s;
}

inline json scene_to_json(const Scene& s, std::size_t n_angles = AngularGrid::default_size,
                          const std::optional<GeoReference>& georef = std::nullopt)
{
    json ue{{"position", detail::from_vec3(s.ue_position)}};
    if (s.ue_reflector_id)
        ue["object_id"] = *s.ue_reflector_id;
    json objects = json::array();
    for (const auto& r : s.reflectors)
        objects.push_back(json{{"id", r.id},
                               {"class", r.class_label},
                               {"position", detail::from_vec3(r.position)},
                               {"reflectance", r.reflectance}});
    json j{{"grid_n_angles", n_angles}, {"ue", ue}, {"objects", objects}};
    if (georef)
        j["georef"] = georef_to_json(*georef);
    return j;
}

inline json parse_json_file(const std::filesystem::path& path)
{
    const auto text = detail::read_text(path);
    try
    {
        return json::parse(text);
    }
    catch (const json::parse_error& e)
    {
        throw FormatError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

inline Scene load_scene(const std::filesystem::path& path, const ReflectanceTable& table = ReflectanceTable::standard(),
                        std::size_t expected_n_angles = AngularGrid::default_size)
{
    try
    {
        return scene_from_json(parse_json_file(path), table, expected_n_angles);
    }
    catch (const FormatError& e)
    {
        throw FormatError(path.string() + ": " + e.what());
    }
}

inline void save_scene(const Scene& s, const std::filesystem::path& path,
                       std::size_t n_angles = AngularGrid::default_size,
                       const std::optional<GeoReference>& georef = std::nullopt)
{
    detail::write_atomic(path, scene_to_json(s, n_angles, georef).dump(2) + "\n");
}

// ------------------------------------------------------------ profile CSV

inline std::string profiles_to_csv(const std::vector<AngularPowerProfile>& profiles, const std::string& comment = {})
{
    std::string out;
    if (!comment.empty())
        out += "# " + comment + "\n";
    for (const auto& p : profiles)
        out += detail::join(p.vector()) + "\n";
    return out;
}

inline std::vector<AngularPowerProfile> parse_profiles(std::istream& in, std::size_t n_angles = AngularGrid::default_size)
{
    std::vector<AngularPowerProfile> out;
    for (const auto& line : detail::read_data_lines(in))
    {
        const auto cells = detail::split(line.text);
        if (cells.size() != n_angles)
            throw FormatError("profile row has " + std::to_string(cells.size()) + " values, expected " +
                                  std::to_string(n_angles),
                              line.line_no);
        std::vector<double> v(n_angles);
        for (std::size_t j = 0; j < n_angles; ++j)
        {
            const auto x = detail::parse_double(cells[j]);
            if (!x || !std::isfinite(*x) || *x < 0.0)
                throw FormatError("profile value must be a finite nonnegative number", line.line_no);
            v[j] = *x;
        }
        out.emplace_back(std::move(v));
    }
    return out;
}

inline void save_profiles(const std::vector<AngularPowerProfile>& profiles, const std::filesystem::path& path,
                          const std::string& comment = {})
{
    detail::write_atomic(path, profiles_to_csv(profiles, comment));
}

inline std::vector<AngularPowerProfile> load_profiles(const std::filesystem::path& path,
                                                      std::size_t n_angles = AngularGrid::default_size)
{
    auto in = detail::open_input(path);
    return parse_profiles(in, n_angles);
}

// Pairs file: each row holds n_angles simulated values followed by
// n_angles ground-truth values.
inline std::vector<ProfilePair> load_pairs(const std::filesystem::path& path,
                                           std::size_t n_angles = AngularGrid::default_size)
{
    auto in = detail::open_input(path);
    const auto rows = parse_profiles(in, 2 * n_angles);
    std::vector<ProfilePair> pairs;
    pairs.reserve(rows.size());
    for (const auto& r : rows)
    {
        const auto& v = r.vector();
        pairs.push_back({AngularPowerProfile({v.begin(), v.begin() + static_cast<std::ptrdiff_t>(n_angles)}),
                         AngularPowerProfile({v.begin() + static_cast<std::ptrdiff_t>(n_angles), v.end()})});
    }
    return pairs;
}

inline void save_pairs(const std::vector<ProfilePair>& pairs, const std::filesystem::path& path)
{
    std::string out = "# dtbeam pairs: simulated profile then ground-truth profile per row\n";
    for (const auto& p : pairs)
        out += detail::join(p.sim.vector()) + "," + detail::join(p.gt.vector()) + "\n";
    detail::write_atomic(path, out);
}

// ---------------------------------------------------------------- mapping

enum class MappingFormat
{
    Binary,
    Csv
};

inline constexpr int mapping_format_version = 1;
inline constexpr char mapping_magic[8] = {'D', 'T', 'B', 'M', 'A', 'P', '0', '1'};

inline json mapping_metadata_to_json(const AdaptationMapping& m)
{
    const auto& t = m.trained_on;
    return json{{"format", "dtbeam-mapping"},  {"version", mapping_format_version},
                {"n", m.size()},               {"sample_count", t.sample_count},
                {"seed", t.seed},              {"epochs", t.epochs},
                {"final_loss", t.final_loss},  {"method", t.method},
                {"scenario", t.scenario},      {"normalization", t.normalization}};
}

inline MappingMetadata mapping_metadata_from_json(const json& j, std::size_t& n)
{
    MappingMetadata t;
    try
    {
        if (j.value("format", std::string()) != "dtbeam-mapping")
            throw FormatError("mapping: header is not a dtbeam-mapping");
        if (j.at("version").get<int>() != mapping_format_version)
            throw FormatError("mapping: unsupported version " + std::to_string(j.at("version").get<int>()));
        n = j.at("n").get<std::size_t>();
        t.sample_count = j.value("sample_count", std::size_t{0});
        t.seed = j.value("seed", std::uint64_t{0});
        t.epochs = j.value("epochs", std::size_t{0});
        t.final_loss = j.value("final_loss", 0.0);
        t.method = j.value("method", std::string("sgd"));
        t.scenario = j.value("scenario", std::string("*"));
        t.normalization = j.value("normalization", std::string("peak"));
    }
    catch (const json::exception& e)
    {
        throw FormatError(std::string("mapping header: ") + e.what());
    }
    return t;
}

namespace detail
{

template <typename T>
void put_le(std::string& out, T v)
{
    static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out.append(buf, sizeof(T));
}

template <typename T>
T get_le(const std::string& in, std::size_t& pos)
{
    if (pos + sizeof(T) > in.size())
        throw FormatError("mapping: truncated binary file");
    T v;
    std::memcpy(&v, in.data() + pos, sizeof(T));
    pos += sizeof(T);
    static_assert(std::endian::native == std::endian::little, "big-endian hosts are not supported");
    return v;
}

} // namespace detail

inline std::string mapping_to_binary(const AdaptationMapping& m)
{
    m.validate();
    std::string out(mapping_magic, sizeof(mapping_magic));
    const auto header = mapping_metadata_to_json(m).dump();
    detail::put_le(out, static_cast<std::uint32_t>(header.size()));
    out += header;
    detail::put_le(out, static_cast<std::uint32_t>(m.matrix.rows()));
    detail::put_le(out, static_cast<std::uint32_t>(m.matrix.cols()));
    for (Eigen::Index r = 0; r < m.matrix.rows(); ++r)
        for (Eigen::Index c = 0; c < m.matrix.cols(); ++c)
            detail::put_le(out, m.matrix(r, c));
    return out;
}

inline std::string mapping_to_csv(const AdaptationMapping& m)
{
    m.validate();
    std::string out = "# " + mapping_metadata_to_json(m).dump() + "\n";
    std::vector<double> row(static_cast<std::size_t>(m.matrix.cols()));
    for (Eigen::Index r = 0; r < m.matrix.rows(); ++r)
    {
        for (Eigen::Index c = 0; c < m.matrix.cols(); ++c)
            row[static_cast<std::size_t>(c)] = m.matrix(r, c);
        out += detail::join(row) + "\n";
    }
    return out;
}

inline AdaptationMapping mapping_from_bytes(const std::string& bytes)
{
    AdaptationMapping m;
    std::size_t n = 0;
    if (bytes.size() >= sizeof(mapping_magic) && std::memcmp(bytes.data(), mapping_magic, sizeof(mapping_magic)) == 0)
    {
        std::size_t pos = sizeof(mapping_magic);
        const auto hlen = detail::get_le<std::uint32_t>(bytes, pos);
        if (pos + hlen > bytes.size())
            throw FormatError("mapping: truncated header");
        json header;
        try
        {
            header = json::parse(bytes.substr(pos, hlen));
        }
        catch (const json::parse_error& e)
        {
            throw FormatError(std::string("mapping header: ") + e.what());
        }
        pos += hlen;
        m.trained_on = mapping_metadata_from_json(header, n);
        const auto rows = detail::get_le<std::uint32_t>(bytes, pos);
        const auto cols = detail::get_le<std::uint32_t>(bytes, pos);
        if (rows != n || cols != n)
            throw FormatError("mapping: matrix shape does not match header");
        if (bytes.size() != pos + static_cast<std::size_t>(rows) * cols * sizeof(double))
            throw FormatError("mapping: payload size does not match matrix shape");
        m.matrix.resize(rows, cols);
        for (Eigen::Index r = 0; r < m.matrix.rows(); ++r)
            for (Eigen::Index c = 0; c < m.matrix.cols(); ++c)
                m.matrix(r, c) = detail::get_le<double>(bytes, pos);
    }
    else
    {
        std::istringstream in(bytes);
        std::string first;
        std::getline(in, first);
        const auto t = detail::trim(first);
        if (t.empty() || t.front() != '#')
            throw FormatError("mapping: neither binary magic nor CSV metadata header found");
        json header;
        try
        {
            header = json::parse(t.substr(1));
        }
        catch (const json::parse_error& e)
        {
            throw FormatError(std::string("mapping header: ") + e.what(), 1);
        }
        m.trained_on = mapping_metadata_from_json(header, n);
        const auto rows = detail::read_data_lines(in);
        if (rows.size() != n)
            throw FormatError("mapping: expected " + std::to_string(n) + " rows, found " + std::to_string(rows.size()));
        m.matrix.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (std::size_t r = 0; r < n; ++r)
        {
            const auto cells = detail::split(rows[r].text);
            if (cells.size() != n)
                throw FormatError("mapping row has wrong length", rows[r].line_no + 1);
            for (std::size_t c = 0; c < n; ++c)
            {
                const auto v = detail::parse_double(cells[c]);
                if (!v || !std::isfinite(*v))
                    throw FormatError("mapping entry is not a finite number", rows[r].line_no + 1);
                m.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = *v;
            }
        }
    }
    try
    {
        m.validate();
    }
    catch (const ConfigError& e)
    {
        throw FormatError(std::string("mapping: ") + e.what());
    }
    return m;
}

inline void save_mapping(const AdaptationMapping& m, const std::filesystem::path& path,
                         MappingFormat format = MappingFormat::Binary)
{
    detail::write_atomic(path, format == MappingFormat::Binary ? mapping_to_binary(m) : mapping_to_csv(m));
}

inline AdaptationMapping load_mapping(const std::filesystem::path& path)
{
    try
    {
        return mapping_from_bytes(detail::read_text(path));
    }
    catch (const FormatError& e)
    {
        throw FormatError(path.string() + ": " + e.what());
    }
}

} // namespace dtbeam
