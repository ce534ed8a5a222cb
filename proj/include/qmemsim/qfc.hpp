//----------------------------------*-C++-*----------------------------------//
// Copyright 2026 qmemsim developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file qmemsim/qfc.hpp
//! Frequency-conversion device: efficiency vs pump power, pump noise, SNR,
//! and the fiber-transmission crossover.
//---------------------------------------------------------------------------//
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "error.hpp"
#include "random.hpp"
#include "stats.hpp"

namespace qmemsim
{
//---------------------------------------------------------------------------//
//! Passive transmissions that bound the achievable device efficiency.
struct PassiveLossBudget
{
    double waveguide_coupling{0.60};
    double waveguide_transmission{0.70};
    double fiber_coupling{0.60};
    double filter_transmission{0.70};

    double product() const
    {
        return waveguide_coupling * waveguide_transmission * fiber_coupling
               * filter_transmission;
    }
};

//---------------------------------------------------------------------------//
/*!
 * Conversion-device constants and operating point.
 *
 * \c delta_n_per_w is the probability per gate per watt of pump to *detect* a
 * noise photon (detector efficiency included), so n = delta_n * P is directly
 * comparable to the signal click probability s. The simulator divides by
 * \c det_eta_1552 when it injects noise photons ahead of the detector.
 *
 * Only the product length_cm * sqrt(eta_n) enters the efficiency curve. The
 * default length puts the sin^2 maximum at the 120 mW operating point for
 * eta_n = 1.2 W^-1 cm^-2.
 */
struct QfcParams
{
    double eta_max{0.136};
    double eta_n_per_w_cm2{1.20};
    double length_cm{4.14};
    double pump_power_w{0.12};
    double delta_n_per_w{1.2e-3};
    double dc_prob{1.6e-5};
    double det_eta_1552{0.1};
    double filter_eta{1.0};
    PassiveLossBudget passive{};

    void validate() const
    {
        auto fail = [](std::string const& msg) {
            throw ConfigError("qfc: " + msg);
        };
        if (!(eta_max >= 0 && eta_max <= 1))
            fail("eta_max must lie in [0, 1]");
        if (!(eta_n_per_w_cm2 >= 0) || !std::isfinite(eta_n_per_w_cm2))
            fail("eta_n_per_w_cm2 must be finite and >= 0");
        if (!(length_cm >= 0) || !std::isfinite(length_cm))
            fail("length_cm must be finite and >= 0");
        if (!(pump_power_w >= 0) || !std::isfinite(pump_power_w))
            fail("pump_power_w must be finite and >= 0");
        if (!(delta_n_per_w >= 0) || !std::isfinite(delta_n_per_w))
            fail("delta_n_per_w must be finite and >= 0");
        if (!(dc_prob >= 0 && dc_prob <= 1))
            fail("dc_prob must lie in [0, 1]");
        if (!(det_eta_1552 > 0 && det_eta_1552 <= 1))
            fail("det_eta_1552 must lie in (0, 1]");
        if (!(filter_eta >= 0 && filter_eta <= 1))
            fail("filter_eta must lie in [0, 1]");
    }

    //! Non-fatal findings, e.g. eta_max above the passive-loss ceiling.
    std::vector<std::string> warnings() const
    {
        std::vector<std::string> out;
        if (eta_max > passive.product() + 1e-12)
            out.push_back("qfc: eta_max " + std::to_string(eta_max)
                          + " exceeds the passive-loss ceiling "
                          + std::to_string(passive.product()));
        return out;
    }
};

//---------------------------------------------------------------------------//
//! eta_max * sin^2(L sqrt(P eta_n)).
inline double device_efficiency(QfcParams const& p)
{
    double const arg = p.length_cm * std::sqrt(p.pump_power_w * p.eta_n_per_w_cm2);
    double const s = std::sin(arg);
    return p.eta_max * s * s;
}

//! Device efficiency at a different pump power.
inline double device_efficiency(QfcParams p, double pump_power_w)
{
    p.pump_power_w = pump_power_w;
    return device_efficiency(p);
}

//! Pump power of the first efficiency maximum: (pi/2)^2 / (L^2 eta_n).
inline double pump_at_max_efficiency(QfcParams const& p)
{
    double const k2 = p.length_cm * p.length_cm * p.eta_n_per_w_cm2;
    if (!(k2 > 0))
        throw NumericalError("qfc: eta_n or length is zero, efficiency has no "
                             "maximum");
    double const half_pi = std::numbers::pi / 2;
    return half_pi * half_pi / k2;
}

//! Noise detection probability per gate, delta_n * P.
inline double noise_detection_probability(QfcParams const& p)
{
    return p.delta_n_per_w * p.pump_power_w;
}

//! Noise photon probability per gate ahead of the telecom detector.
inline double noise_photon_probability(QfcParams const& p)
{
    double const q = noise_detection_probability(p) / p.det_eta_1552;
    if (!(q <= 1))
        throw DomainError("qfc: noise photon probability per gate exceeds 1 ("
                          + std::to_string(q) + ")");
    return q;
}

//---------------------------------------------------------------------------//
/*!
 * SNR = s / (n + dc) with s = mu_in eta_dev eta_d and n = delta_n P.
 *
 * Returns +inf for a nonzero signal over zero noise.
 */
inline double snr_predict(QfcParams const& p, double mu_in)
{
    if (!(mu_in >= 0))
        throw DomainError("snr_predict: mu_in must be >= 0");
    double const s = mu_in * device_efficiency(p) * p.det_eta_1552;
    double const noise = noise_detection_probability(p) + p.dc_prob;
    if (s == 0)
        return 0;
    if (noise == 0)
        return std::numeric_limits<double>::infinity();
    return s / noise;
}

//! SNR_max * mu_in.
inline double snr_linear(double mu_in, double snr_max)
{
    if (!(mu_in >= 0) || !(snr_max >= 0))
        throw DomainError("snr_linear: arguments must be >= 0");
    return snr_max * mu_in;
}

/*!
 * Noise coefficient that yields \c snr_max for a single input photon at the
 * given pump power: delta_n = (eta_dev eta_d / snr_max - dc) / P.
 */
inline double calibrate_delta_n(QfcParams p, double snr_max, double pump_power_w)
{
    if (!(snr_max > 0) || !(pump_power_w > 0))
        throw DomainError("calibrate_delta_n: snr_max and pump power must be > 0");
    p.pump_power_w = pump_power_w;
    double const noise = device_efficiency(p) * p.det_eta_1552 / snr_max;
    double const dn = (noise - p.dc_prob) / pump_power_w;
    if (!(dn >= 0))
        throw NumericalError("calibrate_delta_n: dark counts alone exceed the "
                             "noise budget");
    return dn;
}

/*!
 * Pump power maximizing snr_predict on [0, P at eta_max].
 *
 * Golden-section search in x = L sqrt(eta_n P), where the objective
 * sin^2(x) / (a x^2 + dc) is unimodal on (0, pi/2]. With dc = 0 the supremum
 * sits at P -> 0 and there is no interior maximum.
 */
inline double optimal_pump_for_snr(QfcParams const& p, double mu_in = 1.0)
{
    if (!(p.delta_n_per_w > 0))
        throw DomainError("optimal_pump_for_snr: delta_n must be > 0");
    if (!(p.eta_n_per_w_cm2 > 0) || !(p.length_cm > 0))
        throw NumericalError("optimal_pump_for_snr: eta_n or length is zero, "
                             "no maximum");
    if (!(p.dc_prob > 0))
        throw NumericalError("optimal_pump_for_snr: dc_prob is zero, SNR "
                             "decreases monotonically in pump power");
    if (!(mu_in > 0))
        throw DomainError("optimal_pump_for_snr: mu_in must be > 0");

    double const k2 = p.length_cm * p.length_cm * p.eta_n_per_w_cm2;
    auto snr_at = [&](double x) {
        QfcParams q = p;
        q.pump_power_w = x * x / k2;
        return snr_predict(q, mu_in);
    };
    double const inv_phi = (std::sqrt(5.0) - 1) / 2;
    double lo = 0;
    double hi = std::numbers::pi / 2;
    double x1 = hi - inv_phi * (hi - lo);
    double x2 = lo + inv_phi * (hi - lo);
    double f1 = snr_at(x1);
    double f2 = snr_at(x2);
    while (hi - lo > 1e-12)
    {
        if (f1 < f2)
        {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = snr_at(x2);
        }
        else
        {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = snr_at(x1);
        }
    }
    double const x = 0.5 * (lo + hi);
    return x * x / k2;
}

//---------------------------------------------------------------------------//
//! Fiber attenuation of the two wavelengths and the converter efficiency.
struct LinkBudget
{
    double loss_780_db_per_km{3.0};
    double loss_1552_db_per_km{0.2};
    double device_eta{1.0};
};

/*!
 * Fiber length beyond which converted photons out-transmit direct 780 nm
 * photons: 10 log10(1/eta_dev) / (loss_780 - loss_1552).
 */
inline double crossover_distance(LinkBudget const& b)
{
    if (!(b.loss_780_db_per_km > 0) || !(b.loss_1552_db_per_km > 0))
        throw DomainError("crossover_distance: losses must be > 0");
    if (!(b.loss_780_db_per_km > b.loss_1552_db_per_km))
        throw DomainError("crossover_distance: 780 nm loss must exceed 1552 nm "
                          "loss");
    if (!(b.device_eta > 0 && b.device_eta <= 1))
        throw DomainError("crossover_distance: device_eta must lie in (0, 1]");
    return 10 * std::log10(1 / b.device_eta)
           / (b.loss_780_db_per_km - b.loss_1552_db_per_km);
}

//! Transmission after \c km of fiber at \c db_per_km.
inline double fiber_transmission(double km, double db_per_km)
{
    return std::pow(10.0, -db_per_km * km / 10);
}

//! eta_dev eta_loss (eta_d,1552 / eta_d,780).
inline double total_conversion_factor(double eta_dev,
                                      double eta_loss,
                                      double det_eta_1552,
                                      double det_eta_780)
{
    if (!(det_eta_780 > 0))
        throw DomainError("total_conversion_factor: det_eta_780 must be > 0");
    return eta_dev * eta_loss * det_eta_1552 / det_eta_780;
}

//---------------------------------------------------------------------------//
struct ConversionOutcome
{
    std::uint64_t converted{0};
    std::uint64_t noise{0};
};

//! Thinning of input photons by eta_dev * filter_eta.
template<std::uniform_random_bit_generator Rng>
inline std::uint64_t convert_photons(std::uint64_t photons,
                                     QfcParams const& p,
                                     double filter_eta,
                                     Rng& rng)
{
    return binomial_thin(photons, device_efficiency(p) * filter_eta, rng);
}

/*!
 * One gate through the converter: converted signal plus pump-noise photons.
 *
 * Both are photons ahead of the telecom detector, whose efficiency applies
 * downstream. Converted photons keep their input timestamps.
 */
template<std::uniform_random_bit_generator Rng>
inline ConversionOutcome convert_stage(std::uint64_t photons,
                                       QfcParams const& p,
                                       double filter_eta,
                                       Rng& rng)
{
    if (!(filter_eta >= 0 && filter_eta <= 1))
        throw DomainError("convert_stage: filter_eta must lie in [0, 1]");
    ConversionOutcome out;
    out.converted = convert_photons(photons, p, filter_eta, rng);
    out.noise = bernoulli(noise_photon_probability(p), rng) ? 1 : 0;
    return out;
}

//---------------------------------------------------------------------------//
}  // namespace qmemsim
