//----------------------------------*-C++-*----------------------------------//
// Copyright 2026 qmemsim developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file qmemsim/detector.hpp
//---------------------------------------------------------------------------//
#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "error.hpp"
#include "random.hpp"
#include "stats.hpp"

namespace qmemsim
{
//---------------------------------------------------------------------------//
//! Gaussian FWHM to standard deviation: 2 sqrt(2 ln 2).
inline constexpr double kFwhmPerSigma = 2.3548200450309493;

//---------------------------------------------------------------------------//
//! Closed time interval [start, end] in seconds.
struct Gate
{
    double start{0};
    double end{0};

    double width() const { return end - start; }
    double center() const { return 0.5 * (start + end); }
    bool contains(double t) const { return t >= start && t <= end; }
};

//---------------------------------------------------------------------------//
/*!
 * Gated single-photon detector.
 *
 * Timing jitter is Gaussian with the given FWHM and is redrawn until the
 * detection time falls inside the gate, the same rule used for emission
 * times.
 */
struct DetectorModel
{
    double efficiency{1};
    double dark_rate_hz{0};
    double gate_width_s{40e-9};
    double dead_time_s{0};
    double timing_jitter_fwhm_s{0};
    std::string channel_id{"det"};

    void validate() const
    {
        auto fail = [this](std::string const& msg) {
            throw ConfigError("detector '" + channel_id + "': " + msg);
        };
        if (!(efficiency >= 0 && efficiency <= 1))
            fail("efficiency must lie in [0, 1]");
        if (!(dark_rate_hz >= 0) || !std::isfinite(dark_rate_hz))
            fail("dark_rate_hz must be finite and >= 0");
        if (!(gate_width_s > 0) || !std::isfinite(gate_width_s))
            fail("gate_width_s must be > 0");
        if (!(dead_time_s >= 0) || !std::isfinite(dead_time_s))
            fail("dead_time_s must be finite and >= 0");
        if (!(timing_jitter_fwhm_s >= 0) || !std::isfinite(timing_jitter_fwhm_s))
            fail("timing_jitter_fwhm_s must be finite and >= 0");
        if (channel_id.empty())
            fail("channel_id must not be empty");
    }

    //! Mean dark counts per gate.
    double dark_mean_per_gate() const { return dark_rate_hz * gate_width_s; }
};

//---------------------------------------------------------------------------//
//! Gaussian time around \c center, redrawn until it lies inside \c gate.
template<std::uniform_random_bit_generator Rng>
inline double
sample_gaussian_in_gate(double center, double fwhm, Gate const& gate, Rng& rng)
{
    if (fwhm <= 0)
        return center;
    double const sigma = fwhm / kFwhmPerSigma;
    // Far outside the gate the loop would never end; fall back to uniform.
    double const dist = std::max(gate.start - center, center - gate.end);
    if (dist > 6 * sigma)
        return gate.start + uniform01(rng) * gate.width();
    for (;;)
    {
        double const t = center + sigma * standard_normal(rng);
        if (gate.contains(t))
            return t;
    }
}

//! Uniform time inside the gate.
template<std::uniform_random_bit_generator Rng>
inline double sample_uniform_in_gate(Gate const& gate, Rng& rng)
{
    return gate.start + uniform01(rng) * gate.width();
}

//---------------------------------------------------------------------------//
/*!
 * Drop tags closer than \c dead_time to the previous accepted tag.
 *
 * Input must be sorted; exact duplicates are always merged so the output is
 * strictly increasing.
 */
inline void apply_dead_time(std::vector<double>& tags, double dead_time)
{
    if (tags.empty())
        return;
    std::size_t kept = 1;
    double last = tags.front();
    for (std::size_t i = 1; i < tags.size(); ++i)
    {
        double const t = tags[i];
        if (t <= last || t - last < dead_time)
            continue;
        tags[kept++] = t;
        last = t;
    }
    tags.resize(kept);
}

//---------------------------------------------------------------------------//
/*!
 * Detect photons arriving during one gate.
 *
 * Each arrival survives with the detector efficiency (then picks up timing
 * jitter), dark counts are Poisson(rate x gate) uniform in the gate, and the
 * merged sorted list is dead-time filtered.
 */
template<std::uniform_random_bit_generator Rng>
inline std::vector<double> apply_detector(std::span<double const> arrivals,
                                          Gate const& gate,
                                          DetectorModel const& det,
                                          Rng& rng)
{
    std::vector<double> tags;
    for (double t : arrivals)
    {
        if (bernoulli(det.efficiency, rng))
            tags.push_back(
                sample_gaussian_in_gate(t, det.timing_jitter_fwhm_s, gate, rng));
    }
    std::uint64_t const n_dark
        = sample_poisson_small(det.dark_rate_hz * gate.width(), rng);
    for (std::uint64_t i = 0; i < n_dark; ++i)
        tags.push_back(sample_uniform_in_gate(gate, rng));
    std::sort(tags.begin(), tags.end());
    apply_dead_time(tags, det.dead_time_s);
    return tags;
}

//---------------------------------------------------------------------------//
}  // namespace qmemsim
