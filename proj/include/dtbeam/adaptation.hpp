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

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace dtbeam
{

struct ProfilePair
{
    AngularPowerProfile sim;
    AngularPowerProfile gt;
};

enum class MappingInit
{
    Identity,
    Zeros
};

struct TrainConfig
{
    std::size_t batch_size = 256;
    double learning_rate = 1e-3;
    std::size_t epochs = 200;
    std::uint64_t seed = 0;
    MappingInit init = MappingInit::Identity;
    // Stop when the loss improved by less than early_stop_rel_tol (relative)
    // over the last early_stop_window epochs.
    bool early_stop = true;
    std::size_t early_stop_window = 10;
    double early_stop_rel_tol = 1e-6;

    void validate() const
    {
        if (batch_size == 0)
            throw ConfigError("TrainConfig: batch_size must be >= 1");
        if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
            throw ConfigError("TrainConfig: learning_rate must be positive");
        if (epochs == 0)
            throw ConfigError("TrainConfig: epochs must be >= 1");
    }
};

struct MappingMetadata
{
    std::size_t sample_count = 0;
    std::uint64_t seed = 0;
    std::size_t epochs = 0; // epochs actually run
    double final_loss = 0.0;
    std::string method = "sgd"; // "sgd", "closed_form" or "identity"
    std::string scenario = "*"; // "*" for a mapping shared by all scenarios
    std::string normalization = "peak";
};

// Square linear map from simulated to calibrated profiles.
struct AdaptationMapping
{
    Eigen::MatrixXd matrix;
    MappingMetadata trained_on;

    std::size_t size() const noexcept { return static_cast<std::size_t>(matrix.rows()); }

    static AdaptationMapping identity(std::size_t n)
    {
        AdaptationMapping m;
        m.matrix = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        m.trained_on.method = "identity";
        return m;
    }

    void validate() const
    {
        if (matrix.rows() != matrix.cols() || matrix.rows() == 0)
            throw ConfigError("AdaptationMapping: matrix must be square and non-empty");
        if (!matrix.allFinite())
            throw ConfigError("AdaptationMapping: matrix has non-finite entries");
    }
};

struct FitResult
{
    AdaptationMapping mapping;
    double initial_loss = 0.0;
    std::vector<double> loss_curve; // full-dataset mean loss after each epoch
};

namespace detail
{

// Columns are profiles.
inline std::pair<Eigen::MatrixXd, Eigen::MatrixXd> stack_pairs(const std::vector<ProfilePair>& pairs)
{
    if (pairs.empty())
        throw ConfigError("adaptation: empty training set");
    const auto n = pairs.front().sim.size();
    if (n == 0)
        throw ConfigError("adaptation: empty profiles");
    Eigen::MatrixXd sim(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(pairs.size()));
    Eigen::MatrixXd gt(sim.rows(), sim.cols());
    for (std::size_t s = 0; s < pairs.size(); ++s)
    {
        if (pairs[s].sim.size() != n || pairs[s].gt.size() != n)
            throw ConfigError("adaptation: pair " + std::to_string(s) + " has mismatched profile length");
        for (std::size_t j = 0; j < n; ++j)
        {
            sim(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(s)) = pairs[s].sim[j];
            gt(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(s)) = pairs[s].gt[j];
        }
    }
    return {std::move(sim), std::move(gt)};
}

} // namespace detail

// (1/N) sum ||M r_sim - r_gt||^2 over all pairs.
inline double mapping_loss(const Eigen::MatrixXd& m, const std::vector<ProfilePair>& pairs)
{
    const auto [sim, gt] = detail::stack_pairs(pairs);
    if (m.rows() != sim.rows() || m.cols() != sim.rows())
        throw ConfigError("mapping_loss: dimension mismatch");
    return (m * sim - gt).squaredNorm() / static_cast<double>(sim.cols());
}

// Mini-batch gradient descent on the mean squared mapping error. Data is
// reshuffled every epoch with a generator seeded from cfg.seed; the final
// partial batch is used at its actual size.
inline FitResult fit_mapping(const std::vector<ProfilePair>& pairs, const TrainConfig& cfg)
{
    cfg.validate();
    const auto [sim, gt] = detail::stack_pairs(pairs);
    const Eigen::Index n = sim.rows();
    const auto count = static_cast<std::size_t>(sim.cols());

    FitResult result;
    Eigen::MatrixXd& m = result.mapping.matrix;
    if (cfg.init == MappingInit::Identity)
        m = Eigen::MatrixXd::Identity(n, n);
    else
        m = Eigen::MatrixXd::Zero(n, n);

    auto full_loss = [&] { return (m * sim - gt).squaredNorm() / static_cast<double>(count); };
    result.initial_loss = full_loss();
    if (!std::isfinite(result.initial_loss))
        throw DivergenceError("fit_mapping: non-finite loss at epoch 0", 0);

    std::mt19937_64 rng(cfg.seed);
    std::vector<Eigen::Index> order(count);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Eigen::MatrixXd xb;
    Eigen::MatrixXd gb;

    std::size_t epoch = 0;
    while (epoch < cfg.epochs)
    {
        if (result.initial_loss == 0.0)
            break; // already at the global optimum
        ++epoch;
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t start = 0; start < count; start += cfg.batch_size)
        {
            const std::size_t len = std::min(cfg.batch_size, count - start);
            xb.resize(n, static_cast<Eigen::Index>(len));
            gb.resize(n, static_cast<Eigen::Index>(len));
            for (std::size_t b = 0; b < len; ++b)
            {
                xb.col(static_cast<Eigen::Index>(b)) = sim.col(order[start + b]);
                gb.col(static_cast<Eigen::Index>(b)) = gt.col(order[start + b]);
            }
            const Eigen::MatrixXd residual = m * xb - gb;
            m.noalias() -= (cfg.learning_rate * 2.0 / static_cast<double>(len)) * residual * xb.transpose();
        }
        const double loss = full_loss();
        if (!std::isfinite(loss))
            throw DivergenceError("fit_mapping: non-finite loss at epoch " + std::to_string(epoch), epoch);
        result.loss_curve.push_back(loss);

        if (loss == 0.0)
            break;
        const std::size_t w = cfg.early_stop_window;
        if (cfg.early_stop && w > 0 && result.loss_curve.size() > w)
        {
            const double before = result.loss_curve[result.loss_curve.size() - 1 - w];
            if (before > 0.0 && (before - loss) / before < cfg.early_stop_rel_tol)
                break;
        }
    }

    auto& meta = result.mapping.trained_on;
    meta.sample_count = count;
    meta.seed = cfg.seed;
    meta.epochs = epoch;
    meta.final_loss = result.loss_curve.empty() ? result.initial_loss : result.loss_curve.back();
    meta.method = "sgd";
    return result;
}

// M = R_gt R_sim^T (R_sim R_sim^T + eps I)^-1, with eps = 0 when R_sim has
// full row rank and 1e-8 otherwise.
inline AdaptationMapping closed_form_mapping(const std::vector<ProfilePair>& pairs, double ridge = 1e-8)
{
    const auto [sim, gt] = detail::stack_pairs(pairs);
    const Eigen::Index n = sim.rows();
    Eigen::MatrixXd gram = sim * sim.transpose();
    const Eigen::MatrixXd cross = sim * gt.transpose(); // R_sim R_gt^T

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
    Eigen::MatrixXd mt;
    if (qr.rank() == n)
    {
        mt = qr.solve(cross);
    }
    else
    {
        gram.diagonal().array() += ridge;
        mt = gram.ldlt().solve(cross);
    }

    AdaptationMapping m;
    m.matrix = mt.transpose();
    m.trained_on.sample_count = pairs.size();
    m.trained_on.method = "closed_form";
    m.trained_on.final_loss = (m.matrix * sim - gt).squaredNorm() / static_cast<double>(sim.cols());
    return m;
}

struct MappedProfile
{
    AngularPowerProfile profile;
    double clamp_mass = 0.0; // magnitude of negative outputs set to zero
};

// M r with negative outputs clamped to zero.
inline MappedProfile apply_mapping(const AdaptationMapping& m, const AngularPowerProfile& profile)
{
    if (m.size() != profile.size() || m.matrix.cols() != m.matrix.rows())
        throw ConfigError("apply_mapping: mapping is " + std::to_string(m.matrix.rows()) + "x" +
                          std::to_string(m.matrix.cols()) + ", profile has " + std::to_string(profile.size()) +
                          " bins");
    const Eigen::Map<const Eigen::VectorXd> r(profile.values().data(), static_cast<Eigen::Index>(profile.size()));
    const Eigen::VectorXd mapped = m.matrix * r;
    std::vector<double> out(profile.size());
    double clamped = 0.0;
    for (std::size_t j = 0; j < out.size(); ++j)
    {
        const double v = mapped(static_cast<Eigen::Index>(j));
        if (!std::isfinite(v))
            throw DataError("apply_mapping: non-finite output");
        if (v < 0.0)
        {
            clamped -= v;
            out[j] = 0.0;
        }
        else
        {
            out[j] = v;
        }
    }
    return {AngularPowerProfile(std::move(out)), clamped};
}

// Scales a profile so its maximum is one; all-zero profiles are returned as is.
inline AngularPowerProfile peak_normalized(const AngularPowerProfile& profile)
{
    const double peak = profile.peak();
    if (!(peak > 0.0))
        return profile;
    std::vector<double> v(profile.vector());
    for (auto& x : v)
        x /= peak;
    return AngularPowerProfile(std::move(v));
}

} // namespace dtbeam
