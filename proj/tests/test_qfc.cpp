//---------------------------------*-C++-*-----------------------------------//
// Copyright 2026 qmemsim developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file tests/test_qfc.cpp
//---------------------------------------------------------------------------//
#include "qmemsim/qfc.hpp"

#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "qmemsim/error.hpp"
#include "qmemsim/random.hpp"
#include "support/oracles.hpp"

using namespace qmemsim;

TEST(DeviceEfficiency, Anchors)
{
    QfcParams p;
    EXPECT_EQ(device_efficiency(p, 0), 0.0);
    p.length_cm = 1;
    double const p_max = std::pow(std::numbers::pi / 2, 2) / (1 * 1.2);
    EXPECT_NEAR(pump_at_max_efficiency(p), p_max, 1e-15);
    EXPECT_NEAR(device_efficiency(p, p_max), 0.136, 1e-15);
}

TEST(DeviceEfficiency, BoundedAndPeriodicInRootP)
{
    QfcParams p;
    double const k = p.length_cm * std::sqrt(p.eta_n_per_w_cm2);
    for (double x = 0; x < 10; x += 0.173)
    {
        double const e = device_efficiency(p, x * x / (k * k));
        EXPECT_GE(e, 0.0);
        EXPECT_LE(e, p.eta_max + 1e-15);
        double const y = x + std::numbers::pi;
        EXPECT_NEAR(e, device_efficiency(p, y * y / (k * k)), 1e-12);
    }
}

TEST(DeviceEfficiency, DefaultPeakNearOperatingPoint)
{
    QfcParams const p;
    EXPECT_NEAR(pump_at_max_efficiency(p), 0.12, 0.001);
    p.validate();
    EXPECT_TRUE(p.warnings().empty());
    QfcParams q;
    q.eta_max = 0.5;
    EXPECT_FALSE(q.warnings().empty());
}

TEST(Snr, PredictAndLinear)
{
    QfcParams p;
    EXPECT_EQ(snr_predict(p, 0), 0.0);
    EXPECT_EQ(snr_linear(0, 85), 0.0);
    EXPECT_EQ(snr_linear(1, 85), 85.0);
    EXPECT_DOUBLE_EQ(snr_linear(0.25, 85), 21.25);
    EXPECT_THROW(snr_linear(-1, 85), DomainError);
    EXPECT_THROW(snr_predict(p, -1), DomainError);
}

TEST(Snr, LinearInMuWithoutDarks)
{
    QfcParams p;
    p.dc_prob = 0;
    double const snr_max = device_efficiency(p) * p.det_eta_1552
                           / (p.delta_n_per_w * p.pump_power_w);
    for (double mu : {0.01, 0.25, 1.0, 3.0})
        EXPECT_NEAR(snr_predict(p, mu), snr_linear(mu, snr_max), 1e-12 * snr_max);
}

TEST(Snr, CalibrationReproducesSnrMax)
{
    QfcParams p;
    p.delta_n_per_w = calibrate_delta_n(p, 85, 0.12);
    p.pump_power_w = 0.12;
    EXPECT_NEAR(snr_predict(p, 1.0), 85.0, 1e-9);
    EXPECT_NEAR(snr_predict(p, 0.25), 21.25, 1e-9);
}

TEST(Snr, RisesPeaksFalls)
{
    QfcParams p;
    p.delta_n_per_w = calibrate_delta_n(p, 85, 0.12);
    double const p_opt = optimal_pump_for_snr(p);
    double const p_max = pump_at_max_efficiency(p);
    EXPECT_GT(p_opt, 0.0);
    EXPECT_LT(p_opt, p_max);
    auto snr = [&](double pw) {
        QfcParams q = p;
        q.pump_power_w = pw;
        return snr_predict(q, 1.0);
    };
    double const best = snr(p_opt);
    EXPECT_GE(best, snr(0.5 * p_opt));
    EXPECT_GE(best, snr(1.5 * p_opt));
    EXPECT_LT(snr(1e-4), best);
    EXPECT_LT(snr(2 * p_max), best);
    // Stationary: derivative vanishes at the optimum
    double const h = 1e-6 * p_opt;
    EXPECT_NEAR((snr(p_opt + h) - snr(p_opt - h)) / (2 * h) * p_opt / best, 0.0,
                1e-4);
}

TEST(Snr, ArgmaxInvariantUnderNoiseScale)
{
    QfcParams p;
    p.delta_n_per_w = calibrate_delta_n(p, 85, 0.12);
    QfcParams q = p;
    q.delta_n_per_w *= 3;
    q.dc_prob *= 3;
    EXPECT_NEAR(optimal_pump_for_snr(p), optimal_pump_for_snr(q), 1e-8);
    q.pump_power_w = p.pump_power_w = 0.1;
    EXPECT_NEAR(snr_predict(q, 1) * 3, snr_predict(p, 1), 1e-9);
}

TEST(Snr, DegenerateHasNoMaximum)
{
    QfcParams p;
    p.eta_n_per_w_cm2 = 0;
    EXPECT_THROW(optimal_pump_for_snr(p), NumericalError);
    p = {};
    p.length_cm = 0;
    EXPECT_THROW(optimal_pump_for_snr(p), NumericalError);
    EXPECT_THROW(pump_at_max_efficiency(p), NumericalError);
}

TEST(Crossover, ClosedForm)
{
    EXPECT_EQ(crossover_distance({3.0, 0.2, 1.0}), 0.0);
    EXPECT_NEAR(crossover_distance({3.0, 0.2, 0.001}), 10.71, 0.005);
    EXPECT_NEAR(crossover_distance({3.0, 0.2, 0.136}), 3.09, 0.005);
    EXPECT_NEAR(crossover_distance({3.0, 0.2, 0.01}), 7.14, 0.005);
    EXPECT_NEAR(crossover_distance({3.0, 0.2, 0.1}), 3.57, 0.005);
    for (double eta : {1e-9, 1e-4, 0.3, 0.9})
        EXPECT_NEAR(crossover_distance({3.0, 0.2, eta}),
                    qmemsim_test::crossover_oracle(eta), 1e-9);
}

TEST(Crossover, TransmissionsBalance)
{
    double const eta = 0.001;
    double const d = crossover_distance({3.0, 0.2, eta});
    EXPECT_NEAR(fiber_transmission(d, 3.0), eta * fiber_transmission(d, 0.2), 1e-15);
}

TEST(Crossover, Errors)
{
    EXPECT_THROW(crossover_distance({3.0, 0.2, 1.5}), DomainError);
    EXPECT_THROW(crossover_distance({3.0, 0.2, 0.0}), DomainError);
    EXPECT_THROW(crossover_distance({0.2, 3.0, 0.1}), DomainError);
    EXPECT_THROW(crossover_distance({3.0, 0.0, 0.1}), DomainError);
}

TEST(ConvertStage, PumpOff)
{
    QfcParams p;
    p.pump_power_w = 0;
    auto rng = derive_stream(1, 0);
    for (int i = 0; i < 1000; ++i)
    {
        auto const out = convert_stage(5, p, 1.0, rng);
        ASSERT_EQ(out.converted, 0u);
        ASSERT_EQ(out.noise, 0u);
    }
}

TEST(ConvertStage, ThinningAndNoiseRates)
{
    QfcParams p;  // 120 mW
    auto rng = derive_stream(2, 0);
    int const n = 1000000;
    std::uint64_t conv = 0, noise = 0;
    for (int i = 0; i < n; ++i)
    {
        auto const out = convert_stage(1, p, 0.8, rng);
        conv += out.converted;
        noise += out.noise;
    }
    double const pc = device_efficiency(p) * 0.8;
    double const pn = p.delta_n_per_w * p.pump_power_w / p.det_eta_1552;
    EXPECT_NEAR(double(conv) / n, pc, 3 * std::sqrt(pc * (1 - pc) / n));
    EXPECT_NEAR(double(noise) / n, pn, 3 * std::sqrt(pn / n));
    EXPECT_THROW(convert_stage(1, p, 1.1, rng), DomainError);
}

TEST(ConversionFactor, Product)
{
    EXPECT_NEAR(total_conversion_factor(0.136, 0.77, 0.1, 0.43),
                0.136 * 0.77 * 0.1 / 0.43, 1e-15);
    EXPECT_THROW(total_conversion_factor(0.1, 0.7, 0.1, 0), DomainError);
}
