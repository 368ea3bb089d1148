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

// Seeded random sweeps comparing library routines with the naive oracles in
// oracles.hpp. Shared by the unit suite and the acceptance binary. Every
// instance draws from its own generator seeded by (sweep, index).

#pragma once

#include "oracles.hpp"

#include "dtbeam/dtbeam.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace sweeps
{

struct SweepResult
{
    std::string name;
    std::size_t instances = 0;
    std::size_t failures = 0;
    double worst = 0.0; // worst normalized error seen
    double seconds = 0.0;
    std::string first_failure;

    bool ok() const { return instances > 0 && failures == 0; }
};

inline std::mt19937_64 instance_rng(std::uint64_t sweep, std::uint64_t index)
{
    return std::mt19937_64(dtbeam::mix_seed(sweep * 1000003ULL + 17, index));
}

class Timer
{
public:
    double seconds() const
    {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Random nonnegative gains; occasionally a sparse or flat pattern.
inline std::vector<std::vector<double>> random_gains(std::mt19937_64& rng, std::size_t beams, std::size_t n)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<std::vector<double>> g(beams, std::vector<double>(n));
    const int style = static_cast<int>(rng() % 4);
    for (auto& b : g)
        for (auto& v : b)
        {
            v = u(rng);
            if (style == 1 && u(rng) < 0.7)
                v = 0.0;
            if (style == 2)
                v = std::floor(v * 4.0) / 4.0; // coarse values, many ties
        }
    if (style == 3)
        for (auto& b : g)
            b.assign(n, 0.5);
    return g;
}

inline dtbeam::Codebook codebook_from(const std::vector<std::vector<double>>& g)
{
    dtbeam::Codebook cb;
    cb.grid = dtbeam::AngularGrid(g.front().size());
    for (std::size_t k = 0; k < g.size(); ++k)
    {
        auto gains = g[k];
        if (*std::max_element(gains.begin(), gains.end()) <= 0.0)
            gains[0] = 1.0;
        cb.beams.push_back(dtbeam::detail::make_beam(static_cast<int>(k), gains, cb.grid));
    }
    dtbeam::detail::fill_span(cb);
    return cb;
}

inline std::vector<std::vector<double>> gains_of(const dtbeam::Codebook& cb)
{
    std::vector<std::vector<double>> g;
    for (const auto& b : cb.beams)
        g.push_back(b.gains);
    return g;
}

inline double max_abs(const std::vector<double>& v)
{
    double m = 0.0;
    for (double x : v)
        m = std::max(m, std::fabs(x));
    return m;
}

inline void record(SweepResult& r, double err, double tol, const std::string& what)
{
    r.worst = std::max(r.worst, err);
    if (!(err <= tol))
    {
        if (r.failures == 0)
            r.first_failure = what;
        ++r.failures;
    }
}

// reconstruct_profile vs sort-and-accumulate; error relative to the largest
// output value.
inline SweepResult reconstruct_sweep(std::size_t instances, double tol = 1e-12)
{
    SweepResult r;
    r.name = "reconstruct_profile";
    Timer t;
    for (std::size_t i = 0; i < instances; ++i)
    {
        auto rng = instance_rng(1, i);
        const std::size_t beams = 1 + rng() % 64;
        const auto cb = (i % 5 == 0) ? dtbeam::default_l2_codebook() : codebook_from(random_gains(rng, beams, 180));
        const auto g = gains_of(cb);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<double> y(g.size());
        for (auto& v : y)
            v = (i % 7 == 0) ? std::floor(u(rng) * 3.0) : u(rng) * std::pow(10.0, -9.0 * u(rng));
        const std::size_t k = 1 + rng() % g.size();
        const auto got = dtbeam::reconstruct_profile(dtbeam::MeasurementVector(y), cb, k);
        const auto want = oracle::reconstruct(y, g, k);
        const double scale = std::max(max_abs(want), 1e-300);
        double err = 0.0;
        for (std::size_t j = 0; j < want.size(); ++j)
            err = std::max(err, std::fabs(got[j] - want[j]) / scale);
        ++r.instances;
        record(r, err, tol, "instance " + std::to_string(i));
    }
    r.seconds = t.seconds();
    return r;
}

// Impulses straight from the scene geometry: LoS plus one bounce per
// reflector, UE object skipped.
inline std::vector<std::pair<double, double>> scene_impulses(const dtbeam::Scene& s, double lambda)
{
    std::vector<std::pair<double, double>> out;
    const auto& u = s.ue_position;
    out.emplace_back(std::atan2(u.x, u.z) * 180.0 / oracle::pi,
                     oracle::free_space(lambda, std::sqrt(u.x * u.x + u.y * u.y + u.z * u.z)));
    for (const auto& r : s.reflectors)
    {
        if (s.ue_reflector_id && *s.ue_reflector_id == r.id)
            continue;
        const auto& p = r.position;
        const double d1 = std::sqrt(p.x * p.x + p.y * p.y + p.z * p.z);
        const double d2 = std::sqrt((p.x - u.x) * (p.x - u.x) + (p.y - u.y) * (p.y - u.y) + (p.z - u.z) * (p.z - u.z));
        out.emplace_back(std::atan2(p.x, p.z) * 180.0 / oracle::pi, r.reflectance * oracle::free_space(lambda, d1 + d2));
    }
    return out;
}

// simulate_profile vs the direct double-loop convolution; error relative to
// the total binned impulse power.
inline SweepResult convolution_sweep(std::size_t instances, double tol = 1e-12)
{
    SweepResult r;
    r.name = "simulate_profile";
    Timer t;
    for (std::size_t i = 0; i < instances; ++i)
    {
        auto rng = instance_rng(2, i);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        auto polar = [&](double range, double az_deg, double y) {
            const double a = az_deg * oracle::pi / 180.0;
            return dtbeam::Vec3{range * std::sin(a), y, range * std::cos(a)};
        };
        dtbeam::Scene s;
        s.ue_position = polar(2.0 + 60.0 * u(rng), -100.0 + 200.0 * u(rng), -2.0 + 4.0 * u(rng));
        const std::size_t n_ref = rng() % 9;
        for (std::size_t k = 0; k < n_ref; ++k)
            s.reflectors.push_back({"r" + std::to_string(k), polar(1.0 + 60.0 * u(rng), -120.0 + 240.0 * u(rng), -3.0 + 6.0 * u(rng)),
                                    "object", u(rng)});
        if (n_ref > 0 && u(rng) < 0.3)
            s.ue_reflector_id = "r0";
        dtbeam::SimConfig cfg;
        cfg.wavelength_m = 0.001 + 0.01 * u(rng);
        cfg.alpha_hw_deg = 1.0 + 29.0 * u(rng);

        const auto got = dtbeam::simulate_profile(s, cfg);
        const auto imp = scene_impulses(s, cfg.wavelength_m);
        const auto want = oracle::convolve(imp, 180, -90.0, cfg.alpha_hw_deg);
        double mass = 0.0;
        for (const auto& [az, p] : imp)
            mass += p;
        double err = 0.0;
        for (std::size_t j = 0; j < 180; ++j)
            err = std::max(err, std::fabs(got[j] - want[j]) / mass);
        ++r.instances;
        record(r, err, tol, "instance " + std::to_string(i));
    }
    r.seconds = t.seconds();
    return r;
}

// top_k_beams vs exhaustive inner products with a stable sort; exact match.
inline SweepResult top_k_sweep(std::size_t instances)
{
    SweepResult r;
    r.name = "top_k_beams";
    Timer t;
    for (std::size_t i = 0; i < instances; ++i)
    {
        auto rng = instance_rng(3, i);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const std::size_t beams = 1 + rng() % 64;
        const auto cb = (i % 4 == 0) ? dtbeam::default_l2_codebook() : codebook_from(random_gains(rng, beams, 180));
        const auto g = gains_of(cb);
        std::vector<double> profile(180);
        const int style = static_cast<int>(rng() % 3);
        for (auto& v : profile)
            v = style == 0 ? u(rng) : style == 1 ? (u(rng) < 0.9 ? 0.0 : u(rng)) : 1.0;
        const std::size_t k = 1 + rng() % g.size();
        const bool same = dtbeam::top_k_beams(dtbeam::AngularPowerProfile(profile), cb, k) == oracle::rank_beams(profile, g, k);
        ++r.instances;
        record(r, same ? 0.0 : 1.0, 0.0, "instance " + std::to_string(i));
    }
    r.seconds = t.seconds();
    return r;
}

// loss_percentile vs insertion sort plus interpolation.
inline SweepResult percentile_sweep(std::size_t instances, double tol = 1e-12)
{
    SweepResult r;
    r.name = "loss_percentile";
    Timer t;
    for (std::size_t i = 0; i < instances; ++i)
    {
        auto rng = instance_rng(4, i);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::vector<double> v(1 + rng() % 400);
        for (auto& x : v)
            x = (i % 3 == 0) ? std::floor(u(rng) * 5.0) : 30.0 * u(rng) * u(rng);
        const double q = (i % 10 == 0) ? 100.0 * static_cast<double>(rng() % 2) : 100.0 * u(rng);
        const double got = dtbeam::loss_percentile(v, q);
        const double want = oracle::percentile(v, q);
        ++r.instances;
        record(r, std::fabs(got - want) / std::max(1.0, std::fabs(want)), tol, "instance " + std::to_string(i));
    }
    r.seconds = t.seconds();
    return r;
}

struct MappingSweepResult
{
    SweepResult sgd;         // fit_mapping vs closed_form_mapping, relative Frobenius
    SweepResult closed_form; // closed_form_mapping vs Gauss-Jordan normal equations
};

// Consistent linear problems gt = A sim with random nonnegative A and
// sparse nonnegative profiles of 4..10 bins. The step size keeps every
// mini-batch update contractive: lr = 0.5 / max ||x||^2.
inline MappingSweepResult mapping_sweep(std::size_t instances, double sgd_tol = 0.05, double cf_tol = 1e-8)
{
    MappingSweepResult out;
    out.sgd.name = "fit_mapping";
    out.closed_form.name = "closed_form_mapping";
    Timer t;
    double cf_seconds = 0.0;
    for (std::size_t i = 0; i < instances; ++i)
    {
        auto rng = instance_rng(5, i);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        const std::size_t n = 4 + rng() % 7;
        const std::size_t count = 4 * n + rng() % (4 * n);
        Eigen::MatrixXd a(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        for (Eigen::Index r = 0; r < a.rows(); ++r)
            for (Eigen::Index c = 0; c < a.cols(); ++c)
                a(r, c) = (r == c ? 1.0 : 0.0) + 0.4 * u(rng) * (u(rng) < 0.5 ? 1.0 : 0.0);
        std::vector<dtbeam::ProfilePair> pairs;
        double max_norm2 = 0.0;
        for (std::size_t s = 0; s < count; ++s)
        {
            Eigen::VectorXd x(static_cast<Eigen::Index>(n));
            for (Eigen::Index j = 0; j < x.size(); ++j)
                x(j) = u(rng) < 0.6 ? u(rng) : 0.0;
            x(static_cast<Eigen::Index>(rng() % n)) += 0.5;
            max_norm2 = std::max(max_norm2, x.squaredNorm());
            const Eigen::VectorXd y = a * x;
            pairs.push_back({dtbeam::AngularPowerProfile(std::vector<double>(x.data(), x.data() + x.size())),
                             dtbeam::AngularPowerProfile(std::vector<double>(y.data(), y.data() + y.size()))});
        }

        const Timer cf_t;
        const auto ls = dtbeam::closed_form_mapping(pairs);
        cf_seconds += cf_t.seconds();
        std::vector<std::vector<double>> x_rows, y_rows;
        for (const auto& p : pairs)
        {
            x_rows.push_back(p.sim.vector());
            y_rows.push_back(p.gt.vector());
        }
        const auto naive = oracle::least_squares_map(x_rows, y_rows);
        double cf_err = 0.0;
        double naive_norm = 0.0;
        for (std::size_t r = 0; r < n; ++r)
            for (std::size_t c = 0; c < n; ++c)
            {
                const double d = ls.matrix(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) - naive[r][c];
                cf_err += d * d;
                naive_norm += naive[r][c] * naive[r][c];
            }
        ++out.closed_form.instances;
        record(out.closed_form, std::sqrt(cf_err / naive_norm), cf_tol, "instance " + std::to_string(i));

        dtbeam::TrainConfig cfg;
        cfg.learning_rate = 0.5 / max_norm2;
        cfg.batch_size = 1 + rng() % count;
        cfg.epochs = 3000;
        cfg.seed = rng();
        cfg.init = (i % 2 == 0) ? dtbeam::MappingInit::Identity : dtbeam::MappingInit::Zeros;
        const auto fit = dtbeam::fit_mapping(pairs, cfg);
        const double rel = (fit.mapping.matrix - ls.matrix).norm() / ls.matrix.norm();
        ++out.sgd.instances;
        record(out.sgd, rel, sgd_tol,
               "instance " + std::to_string(i) + " (n=" + std::to_string(n) + ", epochs=" +
                   std::to_string(fit.mapping.trained_on.epochs) + ")");
    }
    out.closed_form.seconds = cf_seconds;
    out.sgd.seconds = t.seconds() - cf_seconds;
    return out;
}

} // namespace sweeps
