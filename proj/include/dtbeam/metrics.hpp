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
#include "dtbeam/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <map>
#include <string>
#include <vector>

namespace dtbeam
{

struct PredictionRecord
{
    std::string sample_id;
    std::vector<int> predicted_l2; // best first
    std::vector<int> predicted_l1; // best first
    std::string method_tag;
};

struct GroundTruth
{
    std::string sample_id;
    MeasurementVector measurements;
    int best_l2 = 0;
    int best_l1 = 0;

    // best_l2 is the strongest measured beam (lowest index on ties) and
    // best_l1 its parent under l2_to_l1.
    static GroundTruth from_measurements(std::string id, MeasurementVector y, const std::vector<int>& l2_to_l1)
    {
        if (y.size() != l2_to_l1.size())
            throw DataError("ground truth '" + id + "': " + std::to_string(y.size()) +
                            " measurements for an L2 codebook of " + std::to_string(l2_to_l1.size()));
        GroundTruth t;
        t.sample_id = std::move(id);
        t.best_l2 = static_cast<int>(argmax_lowest(y.powers()));
        t.best_l1 = l2_to_l1[static_cast<std::size_t>(t.best_l2)];
        t.measurements = std::move(y);
        return t;
    }
};

inline PredictionRecord predict_from_profile(const AngularPowerProfile& profile, const Codebook& l1,
                                             const Codebook& l2, std::size_t k1, std::size_t k2,
                                             std::string sample_id = {}, std::string method_tag = "dt")
{
    PredictionRecord rec;
    rec.sample_id = std::move(sample_id);
    rec.method_tag = std::move(method_tag);
    rec.predicted_l1 = top_k_beams(profile, l1, k1);
    rec.predicted_l2 = top_k_beams(profile, l2, k2);
    return rec;
}

// Beams ranked by gain at the UE azimuth's nearest grid bin. Azimuths outside
// the grid use the nearest endpoint and set *clamped.
inline std::vector<int> gps_los_rank(double ue_azimuth_deg, const Codebook& codebook, std::size_t k,
                                     bool* clamped = nullptr)
{
    if (codebook.beams.empty())
        throw ConfigError("gps_los_rank: empty codebook");
    const auto bin = codebook.grid.nearest_bin(ue_azimuth_deg);
    if (clamped)
        *clamped = !bin.has_value();
    const std::size_t j = bin ? *bin : codebook.grid.clamped_bin(ue_azimuth_deg);
    std::vector<double> gains(codebook.size());
    for (std::size_t b = 0; b < codebook.size(); ++b)
        gains[b] = codebook.beams[b].gains[j];
    return rank_descending(gains, k);
}

inline int gps_los_predict(double ue_azimuth_deg, const Codebook& codebook, bool* clamped = nullptr)
{
    return gps_los_rank(ue_azimuth_deg, codebook, 1, clamped).front();
}

namespace detail
{

inline void check_aligned(const std::vector<PredictionRecord>& preds, const std::vector<GroundTruth>& truths)
{
    if (preds.size() != truths.size())
        throw DataError("metrics: " + std::to_string(preds.size()) + " predictions for " +
                        std::to_string(truths.size()) + " ground truths");
    for (std::size_t n = 0; n < preds.size(); ++n)
        if (preds[n].sample_id != truths[n].sample_id)
            throw DataError("metrics: sample id mismatch at position " + std::to_string(n) + " ('" +
                            preds[n].sample_id + "' vs '" + truths[n].sample_id + "')");
}

inline std::size_t effective_k(std::size_t k, std::size_t available, const std::string& id)
{
    if (k == 0)
        return available;
    if (available < k)
        throw DataError("sample '" + id + "' has " + std::to_string(available) + " predictions, need " +
                        std::to_string(k));
    return k;
}

} // namespace detail

// Fraction of samples whose true L1 beam is among the first k predicted L1
// beams (k = 0 uses every prediction).
inline double l1_accuracy(const std::vector<PredictionRecord>& preds, const std::vector<GroundTruth>& truths,
                          std::size_t k = 0)
{
    detail::check_aligned(preds, truths);
    if (preds.empty())
        throw DataError("l1_accuracy: no samples");
    std::size_t hits = 0;
    for (std::size_t n = 0; n < preds.size(); ++n)
    {
        const auto kk = detail::effective_k(k, preds[n].predicted_l1.size(), preds[n].sample_id);
        const auto first = preds[n].predicted_l1.begin();
        if (std::find(first, first + static_cast<std::ptrdiff_t>(kk), truths[n].best_l1) !=
            first + static_cast<std::ptrdiff_t>(kk))
            ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(preds.size());
}

enum class DbConvention
{
    Amplitude, // 20 log10 of the power ratio, as the metric is usually printed
    Power      // 10 log10
};

inline double db_factor(DbConvention c) noexcept { return c == DbConvention::Amplitude ? 20.0 : 10.0; }

struct PowerLossResult
{
    double aggregate_db = 0.0;
    std::vector<double> per_sample_db;    // aligned with included_ids
    std::vector<std::string> included_ids;
    std::vector<std::string> excluded_ids; // zero best-beam power
};

// Aggregate: factor * log10(mean_n(y_best / max over top-k predicted y)).
// Per sample: factor * log10(y_best / max over top-k predicted y).
inline PowerLossResult power_loss(const std::vector<PredictionRecord>& preds, const std::vector<GroundTruth>& truths,
                                  std::size_t k, DbConvention convention = DbConvention::Amplitude)
{
    detail::check_aligned(preds, truths);
    if (k == 0)
        throw ConfigError("power_loss: k must be >= 1");
    const double factor = db_factor(convention);
    PowerLossResult out;
    double ratio_sum = 0.0;
    for (std::size_t n = 0; n < preds.size(); ++n)
    {
        const auto& y = truths[n].measurements;
        const double best = y[static_cast<std::size_t>(truths[n].best_l2)];
        if (!(best > 0.0))
        {
            out.excluded_ids.push_back(preds[n].sample_id);
            continue;
        }
        detail::effective_k(k, preds[n].predicted_l2.size(), preds[n].sample_id);
        double chosen = 0.0;
        for (std::size_t j = 0; j < k; ++j)
        {
            const auto beam = preds[n].predicted_l2[j];
            if (beam < 0 || static_cast<std::size_t>(beam) >= y.size())
                throw DataError("sample '" + preds[n].sample_id + "': predicted beam " + std::to_string(beam) +
                                " has no measurement");
            chosen = std::max(chosen, y[static_cast<std::size_t>(beam)]);
        }
        const double ratio = best / chosen; // +inf when every predicted beam measured zero
        ratio_sum += ratio;
        out.per_sample_db.push_back(factor * std::log10(ratio));
        out.included_ids.push_back(preds[n].sample_id);
    }
    if (out.per_sample_db.empty())
        throw DataError("power_loss: no sample with positive best-beam power");
    out.aggregate_db = factor * std::log10(ratio_sum / static_cast<double>(out.per_sample_db.size()));
    return out;
}

// Linearly interpolated percentile (q in [0, 100]) of the values.
inline double loss_percentile(std::vector<double> values, double q)
{
    if (values.empty())
        throw DataError("loss_percentile: empty sequence");
    if (!(q >= 0.0 && q <= 100.0))
        throw ConfigError("loss_percentile: q must lie in [0, 100]");
    std::sort(values.begin(), values.end());
    const double pos = q / 100.0 * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0)
        return values[lo];
    return values[lo] + frac * (values[hi] - values[lo]);
}

// Y_k for k = 1..k_max: mean over samples of min(min_{j<=k} |c_hat_j - c|, delta) / delta.
inline std::vector<double> dba_terms(const std::vector<PredictionRecord>& preds, const std::vector<GroundTruth>& truths,
                                     std::size_t k_max = 3, int delta = 5)
{
    detail::check_aligned(preds, truths);
    if (preds.empty())
        throw DataError("dba: no samples");
    if (k_max == 0 || delta <= 0)
        throw ConfigError("dba: k_max and delta must be positive");
    std::vector<double> terms(k_max, 0.0);
    for (std::size_t n = 0; n < preds.size(); ++n)
    {
        detail::effective_k(k_max, preds[n].predicted_l2.size(), preds[n].sample_id);
        int best_dist = delta;
        for (std::size_t k = 0; k < k_max; ++k)
        {
            best_dist = std::min(best_dist, std::abs(preds[n].predicted_l2[k] - truths[n].best_l2));
            terms[k] += static_cast<double>(best_dist) / static_cast<double>(delta);
        }
    }
    for (auto& t : terms)
        t /= static_cast<double>(preds.size());
    return terms;
}

// Distance-based accuracy: 1 - mean_k Y_k.
inline double dba_score(const std::vector<PredictionRecord>& preds, const std::vector<GroundTruth>& truths,
                        std::size_t k_max = 3, int delta = 5)
{
    const auto terms = dba_terms(preds, truths, k_max, delta);
    double sum = 0.0;
    for (double t : terms)
        sum += t;
    return 1.0 - sum / static_cast<double>(k_max);
}

struct ScenarioScore
{
    double score = 0.0;
    bool seen = true;
};

struct OverallDba
{
    double score = 0.0;
    bool weighted = false; // false: plain mean, the scenario mix was not 1 unseen + 3 seen
};

// 1/2 for the unseen scenario and 1/6 for each of three seen ones; any other
// mix falls back to the plain mean.
inline OverallDba overall_dba(const std::map<std::string, ScenarioScore>& per_scenario)
{
    if (per_scenario.empty())
        throw DataError("overall_dba: no scenarios");
    std::size_t unseen = 0;
    double sum = 0.0;
    for (const auto& [id, s] : per_scenario)
    {
        if (!std::isfinite(s.score))
            throw DataError("overall_dba: scenario '" + id + "' has no score");
        unseen += s.seen ? 0 : 1;
        sum += s.score;
    }
    if (unseen == 1 && per_scenario.size() == 4)
    {
        double seen_sum = 0.0;
        double unseen_score = 0.0;
        for (const auto& [id, s] : per_scenario)
            (s.seen ? seen_sum : unseen_score) += s.score;
        return {unseen_score / 2.0 + seen_sum / 6.0, true};
    }
    return {sum / static_cast<double>(per_scenario.size()), false};
}

} // namespace dtbeam
