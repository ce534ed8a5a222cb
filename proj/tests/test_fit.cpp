//---------------------------------*-C++-*-----------------------------------//
// Copyright 2026 qmemsim developers.
// SPDX-License-Identifier: Apache-2.0
//---------------------------------------------------------------------------//
//! \file tests/test_fit.cpp
//---------------------------------------------------------------------------//
#include "qmemsim/fit.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "qmemsim/error.hpp"
#include "qmemsim/qfc.hpp"
#include "qmemsim/random.hpp"

using namespace qmemsim;

namespace
{
std::vector<FitPoint> sin2_points(double eta_max, double eta_n, double length,
                                  double noise, std::uint64_t seed)
{
    auto rng = derive_stream(seed, 0);
    std::vector<FitPoint> pts;
    double const p_max = std::pow(std::numbers::pi / 2, 2) / (length * length * eta_n);
    for (int i = 1; i <= 15; ++i)
    {
        double const p = 1.5 * p_max * i / 15;
        double const s = std::sin(length * std::sqrt(eta_n * p));
        double const eta = eta_max * s * s;
        double const sigma = noise > 0 ? noise * eta : 1e-3;
        pts.push_back({p, eta + (noise > 0 ? sigma * standard_normal(rng) : 0), sigma});
    }
    return pts;
}

//! Residual-gradient check: d(chi^2)/dp_k by central differences.
double chi2(FitModel const& model, std::vector<FitPoint> const& pts,
            std::vector<double> const& p)
{
    double s = 0;
    for (auto const& pt : pts)
    {
        double const r = (pt.y - model(pt.x, p)) / pt.sigma;
        s += r * r;
    }
    return s;
}
}  // namespace

TEST(LeastSquares, QuadraticOneParameter)
{
    FitModel const model = [](double, std::span<double const> p) { return p[0]; };
    std::vector<FitPoint> pts{{0, 1.0, 1}, {1, 2.0, 1}, {2, 3.0, 1}};
    auto const r = least_squares(model, pts, {10.0}, {"c"});
    ASSERT_TRUE(r.converged) << r.diagnostic;
    EXPECT_NEAR(r.value("c"), 2.0, 1e-10);
    EXPECT_LE(r.iterations, 3);
    EXPECT_NEAR(r.residual_norm, 2.0, 1e-10);
}

TEST(LeastSquares, Rosenbrock)
{
    // Residuals 10 (p1 - p0^2) and (1 - p0) as two data points
    FitModel const model = [](double x, std::span<double const> p) {
        return x == 0 ? 10 * (p[1] - p[0] * p[0]) : -(1 - p[0]);
    };
    std::vector<FitPoint> pts{{0, 0, 1}, {1, 0, 1}};
    FitOptions opts;
    opts.scale_covariance = false;
    auto const r = least_squares(model, pts, {-1.2, 1.0}, {"a", "b"}, opts);
    ASSERT_TRUE(r.converged) << r.diagnostic;
    EXPECT_NEAR(r.value("a"), 1.0, 1e-8);
    EXPECT_NEAR(r.value("b"), 1.0, 1e-8);
}

TEST(LeastSquares, NaNModelIsRefused)
{
    FitModel const model = [](double x, std::span<double const> p) {
        return p[0] < 0 ? std::numeric_limits<double>::quiet_NaN() : p[0] * x;
    };
    std::vector<FitPoint> pts{{1, 1, 1}, {2, 2, 1}};
    try
    {
        least_squares(model, pts, {-1.0}, {"k"});
        FAIL() << "expected DomainError";
    }
    catch (DomainError const& e)
    {
        EXPECT_NE(std::string(e.what()).find("-1"), std::string::npos) << e.what();
    }
}

TEST(LeastSquares, NaNDataIsRefused)
{
    FitModel const model = [](double x, std::span<double const> p) { return p[0] * x; };
    std::vector<FitPoint> pts{{1, std::numeric_limits<double>::quiet_NaN(), 1}};
    EXPECT_THROW(least_squares(model, pts, {1.0}, {"k"}), DomainError);
    std::vector<FitPoint> bad_sigma{{1, 1, 0}};
    EXPECT_THROW(least_squares(model, bad_sigma, {1.0}, {"k"}), DomainError);
}

TEST(LeastSquares, IterationCapGivesDiagnostic)
{
    FitModel const model = [](double x, std::span<double const> p) {
        return p[0] * std::exp(p[1] * x);
    };
    std::vector<FitPoint> pts;
    for (int i = 0; i < 10; ++i)
        pts.push_back({0.1 * i, 2 * std::exp(-1.3 * 0.1 * i) + 0.01 * (i % 3), 0.01});
    FitOptions opts;
    opts.max_iterations = 1;
    auto const r = least_squares(model, pts, {0.1, 3.0}, {"a", "b"}, opts);
    EXPECT_FALSE(r.converged);
    EXPECT_FALSE(r.diagnostic.empty());
    EXPECT_EQ(r.parameters.size(), 2u);
}

TEST(Sin2, ExactRecovery)
{
    auto const pts = sin2_points(0.136, 1.2, 1.0, 0, 1);
    auto const r = fit_sin2_efficiency(pts, 1.0);
    ASSERT_TRUE(r.converged) << r.diagnostic;
    EXPECT_NEAR(r.value("eta_max"), 0.136, 0.136 * 1e-6);
    EXPECT_NEAR(r.value("eta_n"), 1.2, 1.2 * 1e-6);
}

TEST(Sin2, NoisyRecoveryWithinQuotedErrors)
{
    int inside = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed)
    {
        auto const r = fit_sin2_efficiency(sin2_points(0.136, 1.2, 4.14, 0.05, seed),
                                           4.14);
        ASSERT_TRUE(r.converged) << r.diagnostic;
        ASSERT_TRUE(r.sigmas_defined);
        inside += std::abs(r.value("eta_max") - 0.136) <= 0.012
                  && std::abs(r.value("eta_n") - 1.2) <= 0.10;
    }
    EXPECT_GE(inside, 19);
}

TEST(Sin2, WeakCoherentVariant)
{
    auto const r = fit_sin2_efficiency(sin2_points(0.114, 1.19, 4.14, 0.03, 7), 4.14);
    ASSERT_TRUE(r.converged);
    EXPECT_NEAR(r.value("eta_max"), 0.114, 0.008);
    EXPECT_NEAR(r.value("eta_n"), 1.19, 0.09);
}

TEST(Sin2, ZeroGradientAtOptimum)
{
    auto const pts = sin2_points(0.136, 1.2, 4.14, 0.05, 3);
    auto const r = fit_sin2_efficiency(pts, 4.14);
    FitModel const model = [](double x, std::span<double const> p) {
        return sin2_efficiency_model(x, p, 4.14);
    };
    double const base = chi2(model, pts, r.parameters);
    for (std::size_t k = 0; k < 2; ++k)
    {
        auto up = r.parameters, dn = r.parameters;
        double const h = 1e-5 * r.parameters[k];
        up[k] += h;
        dn[k] -= h;
        double const grad = (chi2(model, pts, up) - chi2(model, pts, dn)) / (2 * h);
        // Scale: change in chi^2 per relative change of the parameter
        EXPECT_LT(std::abs(grad * r.parameters[k]), 1e-6 * std::max(base, 1.0));
    }
}

TEST(Sin2, ScalingEquivariance)
{
    // Doubling the length maps eta_n to eta_n / 4 with the same eta_max
    auto const pts = sin2_points(0.136, 1.2, 4.14, 0.05, 4);
    auto const a = fit_sin2_efficiency(pts, 4.14);
    auto const b = fit_sin2_efficiency(pts, 8.28);
    EXPECT_NEAR(b.value("eta_max"), a.value("eta_max"), 1e-7);
    EXPECT_NEAR(b.value("eta_n") * 4, a.value("eta_n"), 1e-6);
}

TEST(Sin2, TooFewPoints)
{
    auto pts = sin2_points(0.136, 1.2, 4.14, 0, 1);
    pts.resize(3);
    EXPECT_THROW(fit_sin2_efficiency(pts, 4.14), ConfigError);
}

TEST(LinearOrigin, ExactLine)
{
    std::vector<FitPoint> pts;
    for (double x : {0.1, 0.25, 0.5, 1.0})
        pts.push_back({x, 85 * x, 1});
    auto const r = fit_linear_origin(pts);
    EXPECT_NEAR(r.value("snr_max"), 85.0, 1e-12);
    EXPECT_TRUE(r.converged);
}

TEST(LinearOrigin, NoisyWithinQuotedError)
{
    auto rng = derive_stream(8, 0);
    std::vector<FitPoint> pts;
    for (double x : {0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 1.0})
        pts.push_back({x, 85 * x * (1 + 0.04 * standard_normal(rng)), 0.04 * 85 * x});
    auto const r = fit_linear_origin(pts);
    EXPECT_NEAR(r.value("snr_max"), 85, 3);
    EXPECT_GT(r.sigma("snr_max"), 0);
}

TEST(LinearOrigin, SinglePointAndDegenerate)
{
    std::vector<FitPoint> one{{1, 85, 1}};
    auto const r = fit_linear_origin(one);
    EXPECT_DOUBLE_EQ(r.value("snr_max"), 85.0);
    EXPECT_FALSE(r.sigmas_defined);
    EXPECT_TRUE(std::isnan(r.sigma("snr_max")));
    std::vector<FitPoint> zeros{{0, 1, 1}, {0, 2, 1}};
    EXPECT_THROW(fit_linear_origin(zeros), NumericalError);
}

TEST(Gaussian, ExactRecovery)
{
    std::vector<FitPoint> pts;
    std::vector<double> p{500, 2e-9, 11.4e-9, 3};
    for (int k = -20; k <= 20; ++k)
    {
        double const t = k * 1.28e-9;
        pts.push_back({t, gaussian_peak_model(t, p), 1});
    }
    auto const r = fit_gaussian_peak(pts);
    ASSERT_TRUE(r.converged) << r.diagnostic;
    EXPECT_NEAR(r.value("amplitude"), 500, 500e-6);
    EXPECT_NEAR(r.value("center"), 2e-9, 11.4e-9 * 1e-6);
    EXPECT_NEAR(r.value("fwhm"), 11.4e-9, 11.4e-9 * 1e-6);
    EXPECT_NEAR(r.value("offset"), 3, 1e-3);
}

TEST(Gaussian, FlatIsNotConverged)
{
    std::vector<double> centers;
    std::vector<std::uint64_t> counts;
    for (int k = 0; k < 20; ++k)
    {
        centers.push_back(k * 1e-9);
        counts.push_back(40);
    }
    auto const r = fit_gaussian_peak(histogram_points(centers, counts));
    EXPECT_FALSE(r.converged);
    EXPECT_FALSE(r.diagnostic.empty());
}

TEST(Gaussian, Errors)
{
    std::vector<FitPoint> few(5, FitPoint{0, 1, 1});
    EXPECT_THROW(fit_gaussian_peak(few), ConfigError);
    std::vector<FitPoint> zero(8, FitPoint{0, 0, 1});
    for (std::size_t i = 0; i < zero.size(); ++i)
        zero[i].x = double(i);
    EXPECT_THROW(fit_gaussian_peak(zero), NumericalError);
}

TEST(HistogramPoints, PoissonSigma)
{
    auto const pts = histogram_points(std::vector<double>{0, 1}, std::vector<int>{0, 9});
    EXPECT_EQ(pts[0].sigma, 1.0);
    EXPECT_EQ(pts[1].sigma, 3.0);
}

TEST(PointsCsv, RoundTripAndErrors)
{
    std::vector<FitPoint> pts{{0.1, 1.5, 0.2}, {0.2, 2.5, 0.3}};
    std::ostringstream os;
    write_points_csv(os, pts);
    std::istringstream is(os.str());
    auto const back = read_points_csv(is);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[1].x, 0.2);
    EXPECT_EQ(back[1].y, 2.5);
    EXPECT_EQ(back[1].sigma, 0.3);

    std::istringstream bad("x,y,sigma\n0.1,1.5,0.2\n0.2,oops,0.3\n");
    try
    {
        read_points_csv(bad);
        FAIL() << "expected ParseError";
    }
    catch (ParseError const& e)
    {
        EXPECT_EQ(e.position(), "points:3");
    }
    std::istringstream no_header("1,2,3\n");
    EXPECT_THROW(read_points_csv(no_header), ParseError);
}

TEST(FitReport, ContainsParameters)
{
    std::vector<FitPoint> pts{{1, 85, 1}, {0.5, 42.5, 1}};
    std::ostringstream os;
    write_fit_report(os, fit_linear_origin(pts));
    EXPECT_NE(os.str().find("snr_max"), std::string::npos);
}
