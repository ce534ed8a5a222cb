//----------------------------------*-C++-*----------------------------------//
// Copyright 2026 qmemsim developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file qmemsim/stats.hpp
//! Photon-number statistics of the two-mode squeezed pair source and the
//! closed-form correlation predictors.
//---------------------------------------------------------------------------//
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "error.hpp"
#include "random.hpp"

namespace qmemsim
{
//---------------------------------------------------------------------------//
/*!
 * Diagonal thermal joint photon-number model of a Stokes/anti-Stokes pair.
 *
 * Both modes carry the same number n, with P(n) = mu^n / (1+mu)^(n+1). For
 * small mu the mean pair number equals the Stokes emission probability into
 * the collection mode.
 */
struct PairNumberModel
{
    double mu{0};

    void validate() const
    {
        if (!(mu >= 0) || !std::isfinite(mu))
            throw DomainError("pair model: mu must be finite and >= 0, got "
                              + std::to_string(mu));
    }
};

//---------------------------------------------------------------------------//
//! Thermal (Bose-Einstein) probability of n photons at mean mu.
inline double thermal_pmf(double mu, long long n)
{
    if (!(mu >= 0) || !std::isfinite(mu))
        throw DomainError("thermal_pmf: mu must be finite and >= 0");
    if (n < 0)
        throw DomainError("thermal_pmf: n must be >= 0");
    if (mu == 0)
        return n == 0 ? 1.0 : 0.0;
    // log form avoids overflow of (1+mu)^(n+1) for large n
    double const dn = static_cast<double>(n);
    return std::exp(dn * std::log(mu) - (dn + 1) * std::log1p(mu));
}

//! Mean of the thermal distribution.
inline double thermal_mean(double mu)
{
    return mu;
}

//! Variance of the thermal distribution.
inline double thermal_variance(double mu)
{
    return mu * (1 + mu);
}

/*!
 * Thermal pmf truncated where the cumulative sum reaches 1 - tolerance.
 *
 * The returned vector has P(0) .. P(n_max), with n_max the first index whose
 * cumulative probability is at least 1 - tolerance.
 */
inline std::vector<double>
thermal_pmf_truncated(double mu, double tolerance = 1e-12)
{
    PairNumberModel{mu}.validate();
    std::vector<double> pmf;
    double cumulative = 0;
    double const ratio = mu / (1 + mu);
    double p = 1 / (1 + mu);
    // Geometric tail: 1 - cdf(n) = ratio^(n+1) exactly, so this terminates.
    while (cumulative < 1 - tolerance)
    {
        pmf.push_back(p);
        cumulative += p;
        p *= ratio;
        if (pmf.size() > 100'000'000)
            throw DomainError("thermal_pmf_truncated: mu too large to tabulate");
    }
    return pmf;
}

//---------------------------------------------------------------------------//
//! Thermal draw by inverse CDF of the geometric distribution.
template<std::uniform_random_bit_generator Rng>
inline std::uint64_t sample_thermal(double mu, Rng& rng)
{
    if (mu <= 0)
        return 0;
    // P(n >= k) = (mu/(1+mu))^k, so n = floor(log U / log(mu/(1+mu)))
    double const log_ratio = std::log(mu) - std::log1p(mu);
    return static_cast<std::uint64_t>(
        std::floor(std::log(uniform_open01(rng)) / log_ratio));
}

//! Pair number shared by both modes for one trial.
template<std::uniform_random_bit_generator Rng>
inline std::uint64_t sample_pair_number(PairNumberModel const& model, Rng& rng)
{
    return sample_thermal(model.mu, rng);
}

//! Probability that a thermal trial contains at least one pair.
inline double thermal_nonempty_probability(double mu)
{
    return mu / (1 + mu);
}

//! Poisson draw for small means (sequential inversion).
template<std::uniform_random_bit_generator Rng>
inline std::uint64_t sample_poisson_small(double mean, Rng& rng)
{
    if (mean <= 0)
        return 0;
    if (mean > 30)
    {
        std::poisson_distribution<std::uint64_t> dist(mean);
        return dist(rng);
    }
    double const u = uniform01(rng);
    double p = std::exp(-mean);
    double cumulative = p;
    std::uint64_t k = 0;
    while (u >= cumulative && p > 0)
    {
        ++k;
        p *= mean / static_cast<double>(k);
        cumulative += p;
    }
    return k;
}

//! Poisson draw conditioned on a nonzero outcome.
template<std::uniform_random_bit_generator Rng>
inline std::uint64_t sample_poisson_nonzero(double mean, Rng& rng)
{
    if (mean > 1)
    {
        std::uint64_t k;
        do
        {
            k = sample_poisson_small(mean, rng);
        } while (k == 0);
        return k;
    }
    // Inversion on the zero-truncated pmf: P(k) = mean^k / (k! (e^mean - 1))
    double const u = uniform01(rng);
    double p = mean / std::expm1(mean);
    double cumulative = p;
    std::uint64_t k = 1;
    while (u >= cumulative && p > 0)
    {
        ++k;
        p *= mean / static_cast<double>(k);
        cumulative += p;
    }
    return k;
}

//---------------------------------------------------------------------------//
/*!
 * Binomial thinning: each of n photons survives with probability eta.
 *
 * Every loss and efficiency factor in the chain is one thinning step.
 */
template<std::uniform_random_bit_generator Rng>
inline std::uint64_t binomial_thin(std::uint64_t n, double eta, Rng& rng)
{
    if (!(eta >= 0 && eta <= 1))
        throw DomainError("binomial_thin: eta must lie in [0, 1], got "
                          + std::to_string(eta));
    if (n == 0 || eta == 0)
        return 0;
    if (eta == 1)
        return n;
    if (n <= 32)
    {
        std::uint64_t kept = 0;
        for (std::uint64_t i = 0; i < n; ++i)
            kept += bernoulli(eta, rng) ? 1 : 0;
        return kept;
    }
    std::binomial_distribution<std::uint64_t> dist(n, eta);
    return dist(rng);
}

//---------------------------------------------------------------------------//
//! <n_s n_as> / (<n_s><n_as>) of the diagonal thermal state: 2 + 1/mu.
inline double g2_cross_ideal(double mu)
{
    if (!(mu > 0))
        throw DomainError("g2_cross_ideal: mu must be > 0");
    if (std::isinf(mu))
        return 2.0;
    return 2.0 + 1.0 / mu;
}

//! Autocorrelation of either thermal marginal.
constexpr double g2_auto_ideal() noexcept
{
    return 2.0;
}

/*!
 * Cross-correlation after frequency conversion adds uncorrelated noise.
 *
 * g2c = g2 (SNR + 1) / (SNR + g2). Saturates at 1 + SNR as g2 grows and
 * returns g2 unchanged for noiseless conversion (infinite SNR).
 */
inline double predict_g2_after_conversion(double g2_in, double snr)
{
    if (!(g2_in >= 0) || !(snr >= 0))
        throw DomainError("predict_g2_after_conversion: g2_in and snr must be "
                          ">= 0");
    if (std::isinf(snr) && std::isinf(g2_in))
        throw DomainError("predict_g2_after_conversion: both inputs infinite");
    if (std::isinf(snr))
        return g2_in;
    if (std::isinf(g2_in))
        return snr + 1;
    if (snr + g2_in == 0)
        throw DomainError("predict_g2_after_conversion: snr + g2_in == 0");
    return g2_in * (snr + 1) / (snr + g2_in);
}

//---------------------------------------------------------------------------//
//! Unconverted g2, conversion SNR, and the predicted converted g2.
struct ConversionPrediction
{
    double g2_in{0};
    double snr{0};
    double g2_out{0};
};

inline ConversionPrediction predict_conversion(double g2_in, double snr)
{
    return {g2_in, snr, predict_g2_after_conversion(g2_in, snr)};
}

//---------------------------------------------------------------------------//
}  // namespace qmemsim
