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
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace dtbeam
{

// Camera frame: x to the right, y down, z forward along the optical axis. Meters.
struct Vec3
{
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    friend Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
    friend Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
    friend Vec3 operator*(double s, const Vec3& a) { return {s * a.x, s * a.y, s * a.z}; }
    bool operator==(const Vec3&) const = default;

    double norm() const noexcept { return std::sqrt(x * x + y * y + z * z); }
    bool finite() const noexcept { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

struct PointReflector
{
    std::string id;
    Vec3 position;
    std::string class_label;
    double reflectance = 0.0;
};

struct Scene
{
    std::vector<PointReflector> reflectors;
    Vec3 ue_position;
    std::optional<std::string> ue_reflector_id;

    const PointReflector* find(const std::string& id) const
    {
        for (const auto& r : reflectors)
            if (r.id == id)
                return &r;
        return nullptr;
    }
};

// Throws ConfigError when a scene breaks its invariants.
inline void validate_scene(const Scene& scene)
{
    if (!scene.ue_position.finite() || !(scene.ue_position.norm() > 0.0))
        throw ConfigError("scene: UE position must be finite and away from the camera origin");
    std::set<std::string> ids;
    for (const auto& r : scene.reflectors)
    {
        if (r.id.empty())
            throw ConfigError("scene: reflector with empty id");
        if (!ids.insert(r.id).second)
            throw ConfigError("scene: duplicate reflector id '" + r.id + "'");
        if (!r.position.finite() || !(r.position.norm() > 0.0))
            throw ConfigError("scene: reflector '" + r.id + "' position must be finite and nonzero");
        if (!(r.reflectance >= 0.0 && r.reflectance <= 1.0))
            throw ConfigError("scene: reflector '" + r.id + "' reflectance outside [0, 1]");
    }
    if (scene.ue_reflector_id && !scene.find(*scene.ue_reflector_id))
        throw ConfigError("scene: UE object '" + *scene.ue_reflector_id + "' is not a reflector");
}

struct ReflectanceTable
{
    std::map<std::string, double> by_class;
    double default_reflectance = 0.5;

    static ReflectanceTable standard() { return ReflectanceTable{{{"car", 1.0}, {"pole", 0.6}, {"tree", 0.3}}, 0.5}; }

    void validate() const
    {
        auto ok = [](double v) { return v >= 0.0 && v <= 1.0; };
        if (!ok(default_reflectance))
            throw ConfigError("reflectance table: default outside [0, 1]");
        for (const auto& [label, v] : by_class)
            if (!ok(v))
                throw ConfigError("reflectance table: value for '" + label + "' outside [0, 1]");
    }
};

inline double reflectance_for_class(const std::string& label, const ReflectanceTable& table)
{
    const auto it = table.by_class.find(label);
    return it != table.by_class.end() ? it->second : table.default_reflectance;
}

// atan2(x, z) in degrees: 0 on the optical axis, positive to the right,
// range (-180, 180].
inline double azimuth_of(const Vec3& p)
{
    if (p.x == 0.0 && p.z == 0.0)
        throw GeometryError("azimuth undefined for a position on the camera's vertical axis");
    const double deg = std::atan2(p.x, p.z) * 180.0 / std::numbers::pi;
    return deg == -180.0 ? 180.0 : deg;
}

// Id of the reflector nearest to ue_position (ties to the lexicographically
// lower id). Records the result in scene.ue_reflector_id.
inline std::string identify_ue(Scene& scene, const Vec3& ue_position)
{
    if (scene.reflectors.empty())
        throw NotFoundError("identify_ue: scene has no reflectors");
    const PointReflector* best = nullptr;
    double best_d = 0.0;
    for (const auto& r : scene.reflectors)
    {
        const double d = (r.position - ue_position).norm();
        if (!best || d < best_d || (d == best_d && r.id < best->id))
        {
            best = &r;
            best_d = d;
        }
    }
    scene.ue_reflector_id = best->id;
    return best->id;
}

struct GeoReference
{
    double origin_lat = 0.0;
    double origin_lon = 0.0;
    double camera_yaw_deg = 0.0; // bearing of the optical axis, clockwise from north
    std::optional<double> origin_altitude;

    void validate() const
    {
        if (!(origin_lat >= -90.0 && origin_lat <= 90.0) || !(origin_lon >= -180.0 && origin_lon <= 180.0))
            throw FormatError("georef: origin latitude/longitude out of range");
        if (!std::isfinite(camera_yaw_deg))
            throw FormatError("georef: camera yaw must be finite");
    }
};

inline constexpr double earth_radius_m = 6371000.0;

// Equirectangular east/north offsets rotated into the camera frame, on the
// ground plane (y = 0).
inline Vec3 gps_to_camera_frame(double lat, double lon, const GeoReference& ref)
{
    ref.validate();
    if (!(lat >= -90.0 && lat <= 90.0) || !(lon >= -180.0 && lon <= 180.0))
        throw FormatError("gps_to_camera_frame: latitude/longitude out of range");
    constexpr double rad = std::numbers::pi / 180.0;
    const double north = earth_radius_m * (lat - ref.origin_lat) * rad;
    const double east = earth_radius_m * std::cos(ref.origin_lat * rad) * (lon - ref.origin_lon) * rad;
    const double yaw = ref.camera_yaw_deg * rad;
    const double s = std::sin(yaw);
    const double c = std::cos(yaw);
    return {east * c - north * s, 0.0, east * s + north * c};
}

struct LatLon
{
    double lat = 0.0;
    double lon = 0.0;
};

// Inverse of gps_to_camera_frame (the y component is ignored).
inline LatLon camera_frame_to_gps(const Vec3& p, const GeoReference& ref)
{
    ref.validate();
    constexpr double rad = std::numbers::pi / 180.0;
    const double yaw = ref.camera_yaw_deg * rad;
    const double s = std::sin(yaw);
    const double c = std::cos(yaw);
    const double east = p.x * c + p.z * s;
    const double north = -p.x * s + p.z * c;
    const double lat = ref.origin_lat + north / earth_radius_m / rad;
    const double lon = ref.origin_lon + east / (earth_radius_m * std::cos(ref.origin_lat * rad)) / rad;
    return {lat, lon};
}

} // namespace dtbeam
