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
#include "dtbeam/channel_sim.hpp"
#include "dtbeam/codebook.hpp"
#include "dtbeam/dataset.hpp"
#include "dtbeam/io.hpp"
#include "dtbeam/metrics.hpp"
#include "dtbeam/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace dtbeam
{

enum class Method
{
    DigitalTwin,      // "dt"
    DigitalTwinAdapt, // "dt-adapt"
    GpsLos            // "gps-los"
};

inline std::string to_string(Method m)
{
    switch (m)
    {
    case Method::DigitalTwin:
        return "dt";
    case Method::DigitalTwinAdapt:
        return "dt-adapt";
    case Method::GpsLos:
        return "gps-los";
    }
    return "dt";
}

inline Method method_from_string(const std::string& s)
{
    if (s == "dt")
        return Method::DigitalTwin;
    if (s == "dt-adapt")
        return Method::DigitalTwinAdapt;
    if (s == "gps-los")
        return Method::GpsLos;
    throw ConfigError("unknown method '" + s + "' (expected dt, dt-adapt or gps-los)");
}

// Returns the mapping for a scenario, or nullptr when none exists.
using MappingLookup = std::function<const AdaptationMapping*(const std::string& scenario_id)>;

struct EvalOptions
{
    Method method = Method::DigitalTwin;
    std::optional<Split> split = Split::Test; // nullopt: every sample
    std::vector<std::size_t> l1_ks{1, 2};
    std::vector<std::size_t> l2_ks{1, 2, 3};
    std::size_t dba_k_max = 3;
    int dba_delta = 5;
    DbConvention db_convention = DbConvention::Amplitude;
    SimConfig sim;
    ReflectanceTable reflectance = ReflectanceTable::standard();
    MappingLookup mapping; // required for dt-adapt
};

struct PowerLossSummary
{
    double aggregate_db = 0.0;
    double p50_db = 0.0;
    double p95_db = 0.0;
};

struct ScenarioDba
{
    double score = 0.0;
    bool seen = true;
    std::size_t samples = 0;
};

struct SampleLoss
{
    std::string sample_id;
    std::string scenario_id;
    std::size_t k = 0;
    double loss_db = 0.0;
};

struct EvaluationReport
{
    Method method = Method::DigitalTwin;
    std::string split = "all";
    std::size_t sample_count = 0;
    DbConvention db_convention = DbConvention::Amplitude;
    std::map<std::string, ScenarioDba> per_scenario;
    double overall_dba = 0.0;
    bool overall_weighted = false;
    std::size_t dba_k_max = 3;
    int dba_delta = 5;
    std::map<std::size_t, double> l1_accuracy;
    std::map<std::size_t, PowerLossSummary> power_loss;
    std::vector<std::string> excluded_samples;
    std::vector<std::string> warnings;
    double clamp_mass = 0.0;
    std::vector<SampleLoss> per_sample_losses;
    std::vector<PredictionRecord> predictions;
    std::vector<GroundTruth> truths;
};

// Profile the DT methods rank beams with: the simulated scene, optionally
// peak-normalized and mapped.
inline AngularPowerProfile method_profile(const Scene& scene, Method method, const SimConfig& sim,
                                          const AdaptationMapping* mapping, double* clamp_mass = nullptr)
{
    SimDiagnostics diag;
    auto profile = simulate_profile(scene, sim, &diag);
    if (clamp_mass)
        *clamp_mass += diag.clamp_mass;
    if (method != Method::DigitalTwinAdapt)
        return profile;
    if (!mapping)
        throw ConfigError("dt-adapt requires an adaptation mapping");
    if (mapping->trained_on.normalization == "peak")
        profile = peak_normalized(profile);
    auto mapped = apply_mapping(*mapping, profile);
    if (clamp_mass)
        *clamp_mass += mapped.clamp_mass;
    return std::move(mapped.profile);
}

inline EvaluationReport evaluate_dataset(const Dataset& dataset, const Codebook& l1, const Codebook& l2,
                                         const EvalOptions& opt)
{
    const auto l2_to_l1 = map_l2_to_l1(l1, l2);
    const auto selected = dataset.select(opt.split);
    if (selected.empty())
        throw DataError("evaluate: no samples in split '" + (opt.split ? to_string(*opt.split) : "all") + "'");

    std::size_t k1 = 1;
    for (auto k : opt.l1_ks)
        k1 = std::max(k1, k);
    std::size_t k2 = opt.dba_k_max;
    for (auto k : opt.l2_ks)
        k2 = std::max(k2, k);
    if (k1 > l1.size() || k2 > l2.size())
        throw ConfigError("evaluate: requested top-k exceeds codebook size");

    EvaluationReport rep;
    rep.method = opt.method;
    rep.split = opt.split ? to_string(*opt.split) : "all";
    rep.db_convention = opt.db_convention;
    rep.dba_k_max = opt.dba_k_max;
    rep.dba_delta = opt.dba_delta;

    for (const auto* s : selected)
    {
        rep.truths.push_back(GroundTruth::from_measurements(s->sample_id, s->measurements, l2_to_l1));
        PredictionRecord pred;
        if (opt.method == Method::GpsLos)
        {
            const Vec3 ue = gps_to_camera_frame(s->ue_lat, s->ue_lon, dataset.georef);
            bool clamped = false;
            const double az = azimuth_of(ue);
            pred.predicted_l1 = gps_los_rank(az, l1, k1, &clamped);
            pred.predicted_l2 = gps_los_rank(az, l2, k2);
            if (clamped)
                rep.warnings.push_back(s->sample_id + ": UE azimuth outside grid, clamped to endpoint");
            pred.sample_id = s->sample_id;
            pred.method_tag = to_string(opt.method);
        }
        else
        {
            const Scene scene = load_scene(dataset.resolve(s->scene_ref), opt.reflectance, opt.sim.grid.size());
            const AdaptationMapping* mapping = nullptr;
            if (opt.method == Method::DigitalTwinAdapt)
            {
                if (!opt.mapping)
                    throw ConfigError("dt-adapt requires an adaptation mapping");
                mapping = opt.mapping(s->scenario_id);
                if (!mapping)
                    throw DataError("no adaptation mapping for scenario '" + s->scenario_id + "'");
            }
            const auto profile = method_profile(scene, opt.method, opt.sim, mapping, &rep.clamp_mass);
            pred = predict_from_profile(profile, l1, l2, k1, k2, s->sample_id, to_string(opt.method));
        }
        rep.predictions.push_back(std::move(pred));
    }
    rep.sample_count = rep.predictions.size();

    for (auto k : opt.l1_ks)
        rep.l1_accuracy[k] = l1_accuracy(rep.predictions, rep.truths, k);
    for (auto k : opt.l2_ks)
    {
        const auto pl = power_loss(rep.predictions, rep.truths, k, opt.db_convention);
        rep.power_loss[k] = {pl.aggregate_db, loss_percentile(pl.per_sample_db, 50.0),
                             loss_percentile(pl.per_sample_db, 95.0)};
        for (std::size_t i = 0; i < pl.included_ids.size(); ++i)
        {
            const auto& id = pl.included_ids[i];
            const auto it = std::find_if(selected.begin(), selected.end(),
                                         [&](const SampleRecord* r) { return r->sample_id == id; });
            rep.per_sample_losses.push_back({id, (*it)->scenario_id, k, pl.per_sample_db[i]});
        }
        if (k == opt.l2_ks.front())
            rep.excluded_samples = pl.excluded_ids;
    }

    std::map<std::string, std::pair<std::vector<PredictionRecord>, std::vector<GroundTruth>>> by_scenario;
    for (std::size_t n = 0; n < selected.size(); ++n)
    {
        auto& bucket = by_scenario[selected[n]->scenario_id];
        bucket.first.push_back(rep.predictions[n]);
        bucket.second.push_back(rep.truths[n]);
    }
    std::map<std::string, ScenarioScore> scores;
    for (const auto& [id, bucket] : by_scenario)
    {
        const auto* info = dataset.scenario(id);
        const bool seen = info ? info->seen : true;
        const double score = dba_score(bucket.first, bucket.second, opt.dba_k_max, opt.dba_delta);
        rep.per_scenario[id] = {score, seen, bucket.first.size()};
        scores[id] = {score, seen};
    }
    const auto overall = overall_dba(scores);
    rep.overall_dba = overall.score;
    rep.overall_weighted = overall.weighted;
    if (!overall.weighted)
        rep.warnings.push_back("scenario mix is not 1 unseen + 3 seen; overall DBA is the plain mean");
    return rep;
}

inline constexpr int report_schema_version = 1;

namespace detail
{

// JSON has no infinity; an unbounded loss is written as null.
inline json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline double number_or_inf(const json& j)
{
    return j.is_null() ? std::numeric_limits<double>::infinity() : j.get<double>();
}

} // namespace detail

inline json report_to_json(const EvaluationReport& r)
{
    json per_scenario = json::object();
    for (const auto& [id, s] : r.per_scenario)
        per_scenario[id] = json{{"score", s.score}, {"seen", s.seen}, {"samples", s.samples}};
    json l1 = json::object();
    for (const auto& [k, acc] : r.l1_accuracy)
        l1["top" + std::to_string(k)] = acc;
    json pl = json::object();
    for (const auto& [k, s] : r.power_loss)
        pl["top" + std::to_string(k)] = json{{"aggregate", detail::finite_or_null(s.aggregate_db)},
                                             {"p50", detail::finite_or_null(s.p50_db)},
                                             {"p95", detail::finite_or_null(s.p95_db)}};
    return json{{"schema", "dtbeam-report"},
                {"schema_version", report_schema_version},
                {"method", to_string(r.method)},
                {"split", r.split},
                {"sample_count", r.sample_count},
                {"db_convention", r.db_convention == DbConvention::Amplitude ? "20log10" : "10log10"},
                {"dba",
                 json{{"per_scenario", per_scenario},
                      {"overall", r.overall_dba},
                      {"overall_weighting", r.overall_weighted ? "unseen-1/2-seen-1/6" : "mean"},
                      {"k_max", r.dba_k_max},
                      {"delta", r.dba_delta}}},
                {"l1_accuracy", l1},
                {"power_loss_db", pl},
                {"excluded_samples", r.excluded_samples},
                {"warnings", r.warnings},
                {"clamp_mass", r.clamp_mass}};
}

// Reads back the summary part of a report (per-sample data is not stored).
inline EvaluationReport report_from_json(const json& j)
{
    EvaluationReport r;
    try
    {
        if (j.at("schema").get<std::string>() != "dtbeam-report")
            throw FormatError("report: not a dtbeam-report");
        if (j.at("schema_version").get<int>() != report_schema_version)
            throw FormatError("report: unsupported schema_version");
        r.method = method_from_string(j.at("method").get<std::string>());
        r.split = j.at("split").get<std::string>();
        r.sample_count = j.at("sample_count").get<std::size_t>();
        r.db_convention = j.at("db_convention").get<std::string>() == "10log10" ? DbConvention::Power
                                                                                  : DbConvention::Amplitude;
        const auto& dba = j.at("dba");
        for (const auto& [id, s] : dba.at("per_scenario").items())
            r.per_scenario[id] = {s.at("score").get<double>(), s.at("seen").get<bool>(), s.at("samples").get<std::size_t>()};
        r.overall_dba = dba.at("overall").get<double>();
        r.overall_weighted = dba.at("overall_weighting").get<std::string>() != "mean";
        r.dba_k_max = dba.at("k_max").get<std::size_t>();
        r.dba_delta = dba.at("delta").get<int>();
        for (const auto& [key, v] : j.at("l1_accuracy").items())
            r.l1_accuracy[std::stoul(key.substr(3))] = v.get<double>();
        for (const auto& [key, v] : j.at("power_loss_db").items())
            r.power_loss[std::stoul(key.substr(3))] = {detail::number_or_inf(v.at("aggregate")),
                                                       detail::number_or_inf(v.at("p50")),
                                                       detail::number_or_inf(v.at("p95"))};
        r.excluded_samples = j.at("excluded_samples").get<std::vector<std::string>>();
        r.warnings = j.at("warnings").get<std::vector<std::string>>();
        r.clamp_mass = j.at("clamp_mass").get<double>();
    }
    catch (const json::exception& e)
    {
        throw FormatError(std::string("report: ") + e.what());
    }
    return r;
}

inline void save_report(const EvaluationReport& r, const std::filesystem::path& path)
{
    detail::write_atomic(path, report_to_json(r).dump(2) + "\n");
}

inline EvaluationReport load_report(const std::filesystem::path& path) { return report_from_json(parse_json_file(path)); }

inline std::string per_sample_losses_csv(const EvaluationReport& r)
{
    std::string out = "sample_id,scenario_id,k,loss_db\n";
    for (const auto& s : r.per_sample_losses)
        out += s.sample_id + "," + s.scenario_id + "," + std::to_string(s.k) + "," + detail::format_double(s.loss_db) + "\n";
    return out;
}

// Calibration pairs for the sim-to-real mapping: peak-normalized simulated
// profile and peak-normalized profile reconstructed from the measurements.
inline std::vector<ProfilePair> build_adaptation_pairs(const Dataset& dataset, const Codebook& l2,
                                                       std::optional<Split> split, std::size_t k,
                                                       const SimConfig& sim, const ReflectanceTable& table,
                                                       const std::optional<std::string>& scenario = std::nullopt,
                                                       bool normalize = true)
{
    std::vector<ProfilePair> pairs;
    for (const auto* s : dataset.select(split))
    {
        if (scenario && s->scenario_id != *scenario)
            continue;
        const Scene scene = load_scene(dataset.resolve(s->scene_ref), table, sim.grid.size());
        auto simulated = simulate_profile(scene, sim);
        auto gt = reconstruct_profile(s->measurements, l2, k);
        if (normalize)
        {
            simulated = peak_normalized(simulated);
            gt = peak_normalized(gt);
        }
        pairs.push_back({std::move(simulated), std::move(gt)});
    }
    return pairs;
}

} // namespace dtbeam
